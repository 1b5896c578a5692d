#include "vihmc/network.hpp"

#include <cmath>
#include <sstream>

#include "vihmc/errors.hpp"
#include "vihmc/hash.hpp"

namespace vihmc {

namespace {

ad::Var activate(ad::Var h, Activation a) {
  switch (a) {
    case Activation::Identity: return h;
    case Activation::Sin: return ad::sin(h);
    case Activation::Tanh: return ad::tanh(h);
  }
  return h;
}

Index append_mlp(ParamLayout& layout, const MlpSpec& mlp, const std::string& prefix) {
  Index fan_in = mlp.input_dim;
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    const auto& l = mlp.layers[k];
    const std::string id = prefix + std::to_string(k);
    layout.append(id, "weight", l.width, fan_in);
    if (l.bias) {
      layout.append(id, "bias", l.width, 1);
    }
    fan_in = l.width;
  }
  return fan_in;
}

// Records an MLP on (N x input_dim) inputs; parameters start at `offset`.
ad::Var record_mlp(ad::Tape& tape, const MlpSpec& mlp, ad::Var theta, Index& offset,
                   ad::Var x) {
  ad::Var h = x;
  Index fan_in = mlp.input_dim;
  for (const auto& l : mlp.layers) {
    ad::Var w = tape.slice(theta, offset, l.width, fan_in);
    offset += l.width * fan_in;
    h = ad::matmul(h, ad::transpose(w));
    if (l.bias) {
      ad::Var b = tape.slice(theta, offset, l.width, 1);
      offset += l.width;
      h = ad::add_row(h, b);
    }
    h = activate(h, l.activation);
    fan_in = l.width;
  }
  return h;
}

void validate_mlp(const MlpSpec& mlp, const std::string& what) {
  if (mlp.input_dim <= 0) {
    throw ConfigError(what + ": input dimension must be positive");
  }
  if (mlp.layers.empty()) {
    throw ConfigError(what + ": needs at least one layer");
  }
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    if (mlp.layers[k].width <= 0) {
      throw ConfigError(what + " layer " + std::to_string(k) + ": width must be positive");
    }
  }
}

void append_mlp_text(std::ostringstream& os, const MlpSpec& mlp) {
  os << mlp.input_dim;
  for (const auto& l : mlp.layers) {
    os << "|" << l.width << ":" << to_string(l.activation) << ":" << (l.bias ? 1 : 0);
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Sin: return "sin";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "identity" || s == "linear") return Activation::Identity;
  if (s == "sin") return Activation::Sin;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "' (expected identity, sin or tanh)");
}

Index MlpSpec::output_dim() const { return layers.empty() ? input_dim : layers.back().width; }

Index MlpSpec::param_count() const {
  Index n = 0;
  Index fan_in = input_dim;
  for (const auto& l : layers) {
    n += l.width * fan_in + (l.bias ? l.width : 0);
    fan_in = l.width;
  }
  return n;
}

Index NetworkSpec::param_count() const {
  if (kind == NetworkKind::Mlp) {
    return mlp.param_count();
  }
  return branch.param_count() + trunk.param_count() + (output_bias ? 1 : 0);
}

ParamLayout NetworkSpec::layout() const {
  ParamLayout layout;
  if (kind == NetworkKind::Mlp) {
    append_mlp(layout, mlp, "layer");
  } else {
    append_mlp(layout, branch, "branch.");
    append_mlp(layout, trunk, "trunk.");
    if (output_bias) {
      layout.append("output", "scalar", 1, 1);
    }
  }
  return layout;
}

Index NetworkSpec::latent_dim() const {
  return kind == NetworkKind::DeepONet ? branch.output_dim() : 0;
}

Index NetworkSpec::output_dim() const {
  return kind == NetworkKind::Mlp ? mlp.output_dim() : 1;
}

void NetworkSpec::validate() const {
  if (kind == NetworkKind::Mlp) {
    validate_mlp(mlp, "mlp");
    return;
  }
  validate_mlp(branch, "branch");
  validate_mlp(trunk, "trunk");
  if (branch.output_dim() != trunk.output_dim()) {
    throw ConfigError("deeponet: branch output width " + std::to_string(branch.output_dim()) +
                      " differs from trunk output width " + std::to_string(trunk.output_dim()));
  }
}

Index Dataset::records() const {
  return kind == DatasetKind::Function ? inputs.rows() : inputs.rows() * queries.rows();
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.kind = kind;
  out.queries = queries;
  out.noise_sigma = noise_sigma;
  out.seed = seed;
  out.source = source;
  out.inputs.resize(static_cast<Index>(rows.size()), inputs.cols());
  out.targets.resize(static_cast<Index>(rows.size()), targets.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.inputs.row(static_cast<Index>(k)) = inputs.row(rows[k]);
    out.targets.row(static_cast<Index>(k)) = targets.row(rows[k]);
  }
  return out;
}

void Dataset::validate() const {
  if (inputs.rows() == 0) {
    throw ConfigError("dataset is empty");
  }
  if (targets.rows() != inputs.rows()) {
    throw ConfigError("dataset has " + std::to_string(inputs.rows()) + " inputs but " +
                      std::to_string(targets.rows()) + " target rows");
  }
  if (kind == DatasetKind::Operator && targets.cols() != queries.rows()) {
    throw ConfigError("operator dataset: target columns do not match query count");
  }
}

void check_inputs(const NetworkSpec& spec, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& queries) {
  if (spec.kind == NetworkKind::Mlp) {
    if (inputs.cols() != spec.mlp.input_dim) {
      throw ConfigError("layer0: expected input dimension " + std::to_string(spec.mlp.input_dim) +
                        ", got " + std::to_string(inputs.cols()));
    }
    return;
  }
  if (inputs.cols() != spec.branch.input_dim) {
    throw ConfigError("branch.0: expected " + std::to_string(spec.branch.input_dim) +
                      " sensors, got " + std::to_string(inputs.cols()));
  }
  if (queries.cols() != spec.trunk.input_dim) {
    throw ConfigError("trunk.0: expected query dimension " + std::to_string(spec.trunk.input_dim) +
                      ", got " + std::to_string(queries.cols()));
  }
}

ad::Var build_network(ad::Tape& tape, const NetworkSpec& spec, ad::Var theta,
                      const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries) {
  check_inputs(spec, inputs, queries);
  if (theta.rows() != spec.param_count() || theta.cols() != 1) {
    throw ConfigError("parameter vector has " + std::to_string(theta.rows()) +
                      " entries, network needs " + std::to_string(spec.param_count()));
  }
  Index offset = 0;
  if (spec.kind == NetworkKind::Mlp) {
    return record_mlp(tape, spec.mlp, theta, offset, tape.constant(inputs));
  }
  ad::Var b = record_mlp(tape, spec.branch, theta, offset, tape.constant(inputs));
  ad::Var t = record_mlp(tape, spec.trunk, theta, offset, tape.constant(queries));
  ad::Var out = ad::matmul(b, ad::transpose(t));
  if (spec.output_bias) {
    out = ad::add_scalar(out, tape.slice(theta, offset, 1, 1));
  }
  return out;
}

Eigen::MatrixXd mlp_eval(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                         const Eigen::MatrixXd& x) {
  if (spec.kind != NetworkKind::Mlp) {
    throw ConfigError("mlp_eval on a non-MLP network");
  }
  ad::Tape tape;
  return build_network(tape, spec, tape.constant(theta), x).value();
}

Eigen::MatrixXd deeponet_eval(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                              const Eigen::MatrixXd& u, const Eigen::MatrixXd& y) {
  if (spec.kind != NetworkKind::DeepONet) {
    throw ConfigError("deeponet_eval on a non-DeepONet network");
  }
  ad::Tape tape;
  return build_network(tape, spec, tape.constant(theta), u, y).value();
}

Eigen::MatrixXd evaluate(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                         const Dataset& data) {
  ad::Tape tape;
  return build_network(tape, spec, tape.constant(theta), data.inputs, data.queries).value();
}

Index param_count(const NetworkSpec& spec) { return spec.param_count(); }

Eigen::VectorXd init_params(const NetworkSpec& spec, std::mt19937_64& rng, double scale) {
  const ParamLayout layout = spec.layout();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout.total());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Index fan_in = 0;
  for (const auto& e : layout.entries()) {
    if (e.role == "scalar") {
      continue;
    }
    if (e.role == "weight") {
      fan_in = e.cols;
    }
    const double bound = scale / std::sqrt(static_cast<double>(fan_in));
    for (Index i = 0; i < e.size(); ++i) {
      theta(e.offset + i) = bound * unit(rng);
    }
  }
  return theta;
}

std::string spec_hash(const NetworkSpec& spec) {
  std::ostringstream os;
  if (spec.kind == NetworkKind::Mlp) {
    os << "mlp:";
    append_mlp_text(os, spec.mlp);
  } else {
    os << "deeponet:branch=";
    append_mlp_text(os, spec.branch);
    os << ";trunk=";
    append_mlp_text(os, spec.trunk);
    os << ";bias=" << (spec.output_bias ? 1 : 0);
  }
  return fnv1a_hex(os.str());
}

}  // namespace vihmc
