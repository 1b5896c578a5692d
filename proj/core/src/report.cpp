#include "vihmc/report.hpp"

#include <algorithm>
#include <cmath>

#include "vihmc/errors.hpp"
#include "vihmc/io.hpp"

namespace vihmc {

MethodSummary summarize_vi(const VariationalPosterior& q, const std::string& method) {
  return {method, q.mu, q.sigma()};
}

MethodSummary summarize_archive(const ChainArchive& archive, Index total,
                                const std::string& method) {
  const Eigen::MatrixXd pooled = archive.pooled_draws(archive.good_chains() > 0);
  if (pooled.rows() == 0) {
    throw QualityError(method + ": archive has no kept draws (samples " +
                       std::to_string(archive.samples) + ", burn-in " +
                       std::to_string(archive.burn_in) + ")");
  }
  MethodSummary s{method, Eigen::VectorXd::Zero(total), Eigen::VectorXd::Zero(total)};
  const Eigen::RowVectorXd mean = pooled.colwise().mean();
  const double n = static_cast<double>(pooled.rows());
  for (std::size_t k = 0; k < archive.free_indices.size(); ++k) {
    const Index i = archive.free_indices[k];
    const Index c = static_cast<Index>(k);
    s.mean(i) = mean(c);
    const double ss = (pooled.col(c).array() - mean(c)).square().sum();
    s.sd(i) = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  for (std::size_t k = 0; k < archive.frozen_indices.size(); ++k) {
    s.mean(archive.frozen_indices[k]) = archive.frozen_values(static_cast<Index>(k));
  }
  return s;
}

Eigen::MatrixXd full_draws(const ChainArchive& archive, Index total, int max_draws) {
  const Eigen::MatrixXd pooled = archive.pooled_draws(archive.good_chains() > 0);
  if (pooled.rows() == 0) {
    throw QualityError("archive has no kept draws");
  }
  const Index n = std::min<Index>(pooled.rows(), std::max(max_draws, 1));
  Eigen::MatrixXd out(n, total);
  for (Index r = 0; r < n; ++r) {
    const Index src = r * pooled.rows() / n;
    for (std::size_t k = 0; k < archive.free_indices.size(); ++k) {
      out(r, archive.free_indices[k]) = pooled(src, static_cast<Index>(k));
    }
    for (std::size_t k = 0; k < archive.frozen_indices.size(); ++k) {
      out(r, archive.frozen_indices[k]) = archive.frozen_values(static_cast<Index>(k));
    }
  }
  return out;
}

Eigen::MatrixXd predict_draws(const NetworkSpec& net, const Eigen::MatrixXd& thetas,
                              const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries) {
  Dataset d;
  d.kind = net.kind == NetworkKind::DeepONet ? DatasetKind::Operator : DatasetKind::Function;
  d.inputs = inputs;
  d.queries = queries;
  Eigen::MatrixXd out;
  for (Index s = 0; s < thetas.rows(); ++s) {
    const Eigen::MatrixXd y = evaluate(net, thetas.row(s).transpose(), d);
    if (s == 0) out.resize(thetas.rows(), y.size());
    out.row(s) = Eigen::Map<const Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>>(
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>(y).data(),
        y.size());
  }
  return out;
}

std::string parameter_table_csv(const NetworkSpec& net, const std::vector<MethodSummary>& methods) {
  const ParamLayout layout = net.layout();
  std::string out = "index,name";
  for (const auto& m : methods) out += "," + m.method + "_mean," + m.method + "_sd";
  out += '\n';
  for (Index i = 0; i < layout.total(); ++i) {
    out += std::to_string(i) + "," + layout.name_of(i);
    for (const auto& m : methods) {
      out += "," + format_double(m.mean(i)) + "," + format_double(m.sd(i));
    }
    out += '\n';
  }
  return out;
}

CostRow cost_row(const ChainArchive& archive, const NetworkSpec& net, const Dataset& data,
                 const std::string& method, int max_draws) {
  CostRow row;
  row.method = method;
  long accepted = 0;
  long proposals = 0;
  double seconds = 0.0;
  long samples = 0;
  double step_sum = 0.0;
  int used = 0;
  const bool good_only = archive.good_chains() > 0;
  for (const auto& c : archive.chains) {
    if (good_only && c.bad) continue;
    for (std::size_t s = static_cast<std::size_t>(archive.burn_in); s < c.accepted.size(); ++s) {
      accepted += c.accepted[s];
      ++proposals;
    }
    seconds += c.seconds;
    samples += static_cast<long>(c.accepted.size());
    step_sum += c.adapted_step_size;
    ++used;
    row.leapfrog_steps = c.leapfrog_steps;
  }
  if (used > 0) row.step_size = step_sum / used;
  row.acceptance = proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  row.seconds_per_sample = samples ? seconds / static_cast<double>(samples) : 0.0;
  row.sampled_parameters = archive.dim();
  const Index total = static_cast<Index>(archive.free_indices.size() + archive.frozen_indices.size());
  const Eigen::MatrixXd preds =
      predict_draws(net, full_draws(archive, total, max_draws), data.inputs, data.queries);
  const Eigen::RowVectorXd mean = preds.colwise().mean();
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t = data.targets;
  const Eigen::Map<const Eigen::RowVectorXd> flat(t.data(), t.size());
  row.mse = (mean - flat).squaredNorm() / static_cast<double>(flat.size());
  return row;
}

std::string cost_table_csv(const std::vector<CostRow>& rows) {
  std::string out = "method,sampled_parameters,step_size,leapfrog_steps,acceptance,mse\n";
  for (const auto& r : rows) {
    out += r.method + "," + std::to_string(r.sampled_parameters) + "," + format_double(r.step_size) +
           "," + std::to_string(r.leapfrog_steps) + "," + format_double(r.acceptance) + "," +
           format_double(r.mse) + "\n";
  }
  return out;
}

std::string timing_table_csv(const std::vector<CostRow>& rows) {
  std::string out = "method,sampled_parameters,seconds_per_sample\n";
  for (const auto& r : rows) {
    out += r.method + "," + std::to_string(r.sampled_parameters) + "," +
           format_double(r.seconds_per_sample) + "\n";
  }
  return out;
}

PredictionBand prediction_band(const Eigen::MatrixXd& predictions) {
  PredictionBand b;
  const Index cols = predictions.cols();
  if (predictions.rows() == 0) {
    b.mean = Eigen::VectorXd::Zero(cols);
    b.sd = Eigen::VectorXd::Zero(cols);
    return b;
  }
  // Shifted by the first draw so identical draws give exactly zero spread.
  const double n = static_cast<double>(predictions.rows());
  const Eigen::RowVectorXd shift = predictions.row(0);
  const Eigen::MatrixXd dev = predictions.rowwise() - shift;
  const Eigen::RowVectorXd dev_mean = dev.colwise().mean();
  b.mean = (shift + dev_mean).transpose();
  if (predictions.rows() < 2) {
    b.sd = Eigen::VectorXd::Zero(cols);
    return b;
  }
  const Eigen::ArrayXd ss = (dev.rowwise() - dev_mean).array().square().colwise().sum().transpose();
  b.sd = (ss / (n - 1.0)).sqrt().matrix();
  return b;
}

std::string band_csv(const Eigen::MatrixXd& points, const PredictionBand& band,
                     const std::vector<std::string>& coordinate_names) {
  if (points.rows() != band.mean.size()) {
    throw ConfigError("band_csv: " + std::to_string(points.rows()) + " points for " +
                      std::to_string(band.mean.size()) + " predictions");
  }
  std::string out;
  for (const auto& c : coordinate_names) out += c + ",";
  out += "mean,sd,lower,upper\n";
  const Eigen::VectorXd lo = band.lower();
  const Eigen::VectorXd hi = band.upper();
  for (Index r = 0; r < points.rows(); ++r) {
    for (Index c = 0; c < points.cols(); ++c) out += format_double(points(r, c)) + ",";
    out += format_double(band.mean(r)) + "," + format_double(band.sd(r)) + "," +
           format_double(lo(r)) + "," + format_double(hi(r)) + "\n";
  }
  return out;
}

Index parameter_index(const NetworkSpec& net, const std::string& name) {
  const ParamLayout layout = net.layout();
  for (Index i = 0; i < layout.total(); ++i) {
    if (layout.name_of(i) == name || std::to_string(i) == name) return i;
  }
  std::string names;
  for (Index i = 0; i < layout.total() && i < 40; ++i) {
    names += (i ? ", " : "") + layout.name_of(i);
  }
  if (layout.total() > 40) names += ", ... (" + std::to_string(layout.total()) + " in total)";
  throw ConfigError("unknown parameter '" + name + "'; available: " + names);
}

std::string joint_scatter_csv(const ChainArchive& archive, const NetworkSpec& net,
                              const std::string& x, const std::string& y) {
  const Index ix = parameter_index(net, x);
  const Index iy = parameter_index(net, y);
  const Index total = net.param_count();
  const Eigen::MatrixXd draws =
      full_draws(archive, total, static_cast<int>(archive.pooled_draws(false).rows()));
  std::string out = "draw," + x + "," + y + "\n";
  for (Index r = 0; r < draws.rows(); ++r) {
    out += std::to_string(r) + "," + format_double(draws(r, ix)) + "," +
           format_double(draws(r, iy)) + "\n";
  }
  return out;
}

double mean_relative_l2(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ConfigError("mean_relative_l2: prediction and target shapes differ");
  }
  double s = 0.0;
  for (Index r = 0; r < targets.rows(); ++r) {
    s += (targets.row(r) - predictions.row(r)).norm() / targets.row(r).norm();
  }
  return s / static_cast<double>(targets.rows());
}

}  // namespace vihmc
