#include "vihmc/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "vihmc/errors.hpp"
#include "vihmc/hash.hpp"

namespace vihmc {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) {
      std::string list;
      for (const char* allowed : keys) list += std::string(list.empty() ? "" : ", ") + allowed;
      throw ConfigError(where + ": unknown key '" + k + "' (expected one of: " + list + ")");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json layers_to_json(const MlpSpec& m) {
  json layers = json::array();
  for (const auto& l : m.layers) {
    layers.push_back({{"width", l.width}, {"activation", to_string(l.activation)}, {"bias", l.bias}});
  }
  return {{"input_dim", m.input_dim}, {"layers", layers}};
}

MlpSpec mlp_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"input_dim", "layers"});
  MlpSpec m;
  read(j, "input_dim", m.input_dim, where);
  if (!j.contains("layers") || !j.at("layers").is_array()) {
    throw ConfigError(where + ".layers: expected an array");
  }
  int i = 0;
  for (const auto& l : j.at("layers")) {
    const std::string lw = where + ".layers[" + std::to_string(i++) + "]";
    check_keys(l, lw, {"width", "activation", "bias"});
    LayerSpec s;
    read(l, "width", s.width, lw);
    std::string act = "identity";
    read(l, "activation", act, lw);
    s.activation = parse_activation(act);
    read(l, "bias", s.bias, lw);
    m.layers.push_back(s);
  }
  return m;
}

json network_to_json(const NetworkSpec& n) {
  if (n.kind == NetworkKind::Mlp) {
    json j = layers_to_json(n.mlp);
    j["kind"] = "mlp";
    return j;
  }
  return {{"kind", "deeponet"},
          {"branch", layers_to_json(n.branch)},
          {"trunk", layers_to_json(n.trunk)},
          {"output_bias", n.output_bias}};
}

NetworkSpec network_from_json(const json& j) {
  NetworkSpec n;
  std::string kind = "mlp";
  read(j, "kind", kind, "network");
  if (kind == "mlp") {
    check_keys(j, "network", {"kind", "input_dim", "layers"});
    json body = j;
    body.erase("kind");
    n.kind = NetworkKind::Mlp;
    n.mlp = mlp_from_json(body, "network");
  } else if (kind == "deeponet") {
    check_keys(j, "network", {"kind", "branch", "trunk", "output_bias"});
    n.kind = NetworkKind::DeepONet;
    if (!j.contains("branch") || !j.contains("trunk")) {
      throw ConfigError("network: deeponet needs 'branch' and 'trunk'");
    }
    n.branch = mlp_from_json(j.at("branch"), "network.branch");
    n.trunk = mlp_from_json(j.at("trunk"), "network.trunk");
    read(j, "output_bias", n.output_bias, "network");
  } else {
    throw ConfigError("network.kind: unknown '" + kind + "' (expected mlp or deeponet)");
  }
  return n;
}

json interval_to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(where + ": expected [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json data_to_json(const DataSource& d) {
  switch (d.kind) {
    case DataKind::Sinusoid: {
      const auto& s = d.sinusoid;
      json ranges = json::array();
      for (const auto& r : s.train_ranges) ranges.push_back(interval_to_json(r));
      return {{"generator", "sinusoid"},
              {"a", s.a},
              {"b", s.b},
              {"omega1", s.omega1},
              {"omega2", s.omega2},
              {"phi1", s.phi1},
              {"phi2", s.phi2},
              {"noise_sigma", s.noise_sigma},
              {"train_ranges", ranges},
              {"n_train", s.n_train},
              {"val_range", interval_to_json(s.val_range)},
              {"n_val", s.n_val},
              {"seed", s.seed}};
    }
    case DataKind::Burgers: {
      const auto& b = d.burgers;
      return {{"generator", "burgers"},
              {"viscosity", b.viscosity},
              {"nx", b.nx},
              {"nt", b.nt},
              {"grf_length_scale", b.grf_length_scale},
              {"grf_variance", b.grf_variance},
              {"grf_modes", b.grf_modes},
              {"n_fields", b.n_fields},
              {"train_fraction", b.train_fraction},
              {"cfl", b.cfl},
              {"max_substeps", b.max_substeps},
              {"seed", b.seed},
              {"trunk_dim", d.trunk_dim}};
    }
    case DataKind::Path:
      return {{"path", d.path}};
  }
  return {};
}

DataSource data_from_json(const json& j) {
  DataSource d;
  const std::string w = "data";
  if (j.contains("path")) {
    check_keys(j, w, {"path"});
    d.kind = DataKind::Path;
    read(j, "path", d.path, w);
    return d;
  }
  std::string gen;
  read(j, "generator", gen, w);
  if (gen == "sinusoid") {
    check_keys(j, w, {"generator", "a", "b", "omega1", "omega2", "phi1", "phi2", "noise_sigma",
                      "train_ranges", "n_train", "val_range", "n_val", "seed"});
    d.kind = DataKind::Sinusoid;
    auto& s = d.sinusoid;
    read(j, "a", s.a, w);
    read(j, "b", s.b, w);
    read(j, "omega1", s.omega1, w);
    read(j, "omega2", s.omega2, w);
    read(j, "phi1", s.phi1, w);
    read(j, "phi2", s.phi2, w);
    read(j, "noise_sigma", s.noise_sigma, w);
    if (j.contains("train_ranges")) {
      s.train_ranges.clear();
      for (const auto& r : j.at("train_ranges")) {
        s.train_ranges.push_back(interval_from_json(r, w + ".train_ranges"));
      }
    }
    read(j, "n_train", s.n_train, w);
    if (j.contains("val_range")) s.val_range = interval_from_json(j.at("val_range"), w + ".val_range");
    read(j, "n_val", s.n_val, w);
    read(j, "seed", s.seed, w);
  } else if (gen == "burgers") {
    check_keys(j, w, {"generator", "viscosity", "nx", "nt", "grf_length_scale", "grf_variance",
                      "grf_modes", "n_fields", "train_fraction", "cfl", "max_substeps", "seed",
                      "trunk_dim"});
    d.kind = DataKind::Burgers;
    auto& b = d.burgers;
    read(j, "viscosity", b.viscosity, w);
    read(j, "nx", b.nx, w);
    read(j, "nt", b.nt, w);
    read(j, "grf_length_scale", b.grf_length_scale, w);
    read(j, "grf_variance", b.grf_variance, w);
    read(j, "grf_modes", b.grf_modes, w);
    read(j, "n_fields", b.n_fields, w);
    read(j, "train_fraction", b.train_fraction, w);
    read(j, "cfl", b.cfl, w);
    read(j, "max_substeps", b.max_substeps, w);
    read(j, "seed", b.seed, w);
    read(j, "trunk_dim", d.trunk_dim, w);
  } else {
    throw ConfigError("data: need either 'path' or 'generator' (sinusoid or burgers), got '" +
                      gen + "'");
  }
  return d;
}

json vi_to_json(const ViBlock& v) {
  const auto& t = v.train;
  return {{"epochs", t.epochs},
          {"n_mc", t.n_mc},
          {"batch_size", t.batch_size},
          {"learning_rate", t.adam.learning_rate},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"adam_epsilon", t.adam.epsilon},
          {"plateau",
           {{"enabled", t.plateau.enabled},
            {"factor", t.plateau.factor},
            {"patience", t.plateau.patience},
            {"threshold", t.plateau.threshold},
            {"min_learning_rate", t.plateau.min_learning_rate}}},
          {"sigma0", v.sigma0},
          {"init_scale", v.init_scale},
          {"init_seed", v.init_seed},
          {"seed", v.seed}};
}

ViBlock vi_from_json(const json& j) {
  const std::string w = "vi";
  check_keys(j, w, {"epochs", "n_mc", "batch_size", "learning_rate", "beta1", "beta2",
                    "adam_epsilon", "plateau", "sigma0", "init_scale", "init_seed", "seed"});
  ViBlock v;
  auto& t = v.train;
  read(j, "epochs", t.epochs, w);
  read(j, "n_mc", t.n_mc, w);
  read(j, "batch_size", t.batch_size, w);
  read(j, "learning_rate", t.adam.learning_rate, w);
  read(j, "beta1", t.adam.beta1, w);
  read(j, "beta2", t.adam.beta2, w);
  read(j, "adam_epsilon", t.adam.epsilon, w);
  if (j.contains("plateau")) {
    const json& p = j.at("plateau");
    const std::string pw = w + ".plateau";
    check_keys(p, pw, {"enabled", "factor", "patience", "threshold", "min_learning_rate"});
    read(p, "enabled", t.plateau.enabled, pw);
    read(p, "factor", t.plateau.factor, pw);
    read(p, "patience", t.plateau.patience, pw);
    read(p, "threshold", t.plateau.threshold, pw);
    read(p, "min_learning_rate", t.plateau.min_learning_rate, pw);
  }
  read(j, "sigma0", v.sigma0, w);
  read(j, "init_scale", v.init_scale, w);
  read(j, "init_seed", v.init_seed, w);
  read(j, "seed", v.seed, w);
  return v;
}

json hmc_to_json(const HmcBlock& h) {
  json lf;
  if (h.leapfrog.kind == LeapfrogBlock::Kind::Fixed) {
    lf = {{"steps", h.leapfrog.steps}};
  } else {
    lf = {{"heuristic", h.leapfrog.variance_choice},
          {"variance", h.leapfrog.variance},
          {"use_std", h.leapfrog.use_std}};
  }
  lf["max_steps"] = h.leapfrog.max_steps;
  json j = {{"mode", to_string(h.mode)},
            {"step_size", h.step_size},
            {"full_step_size", h.full_step_size},
            {"leapfrog", lf},
            {"chains", h.chains},
            {"samples", h.samples},
            {"burn_in", h.burn_in},
            {"init", h.init == InitKind::Prior ? "prior" : "vi-jitter"},
            {"init_scale", h.init_scale},
            {"seed", h.seed},
            {"mass", h.vi_mass ? "vi-variance" : "identity"},
            {"divergence_threshold", h.divergence_threshold}};
  j["adapt"] = {{"enabled", h.adapt.enabled},
                {"target_acceptance", h.adapt.target_acceptance},
                {"iterations", h.adapt.iterations},
                {"probe", h.adapt.probe},
                {"tolerance", h.adapt.tolerance},
                {"max_rounds", h.adapt.max_rounds}};
  return j;
}

HmcBlock hmc_from_json(const json& j) {
  const std::string w = "hmc";
  check_keys(j, w, {"mode", "step_size", "full_step_size", "leapfrog", "chains", "samples",
                    "burn_in", "init", "init_scale", "seed", "mass", "divergence_threshold",
                    "adapt"});
  HmcBlock h;
  std::string mode = "reduced";
  read(j, "mode", mode, w);
  h.mode = parse_sample_mode(mode);
  read(j, "step_size", h.step_size, w);
  h.full_step_size = h.step_size;
  read(j, "full_step_size", h.full_step_size, w);
  if (j.contains("leapfrog")) {
    const json& lf = j.at("leapfrog");
    const std::string lw = w + ".leapfrog";
    check_keys(lf, lw, {"steps", "heuristic", "variance", "use_std", "max_steps"});
    if (lf.contains("heuristic")) {
      if (lf.contains("steps")) {
        throw ConfigError(lw + ": give either 'steps' or 'heuristic', not both");
      }
      h.leapfrog.kind = LeapfrogBlock::Kind::Heuristic;
      read(lf, "heuristic", h.leapfrog.variance_choice, lw);
      read(lf, "variance", h.leapfrog.variance, lw);
      read(lf, "use_std", h.leapfrog.use_std, lw);
    } else {
      h.leapfrog.kind = LeapfrogBlock::Kind::Fixed;
      read(lf, "steps", h.leapfrog.steps, lw);
    }
    read(lf, "max_steps", h.leapfrog.max_steps, lw);
  }
  read(j, "chains", h.chains, w);
  read(j, "samples", h.samples, w);
  read(j, "burn_in", h.burn_in, w);
  std::string init = "prior";
  read(j, "init", init, w);
  if (init == "prior") {
    h.init = InitKind::Prior;
  } else if (init == "vi-jitter") {
    h.init = InitKind::ViJitter;
  } else {
    throw ConfigError("hmc.init: unknown '" + init + "' (expected prior or vi-jitter)");
  }
  read(j, "init_scale", h.init_scale, w);
  read(j, "seed", h.seed, w);
  std::string mass = "identity";
  read(j, "mass", mass, w);
  if (mass != "identity" && mass != "vi-variance") {
    throw ConfigError("hmc.mass: unknown '" + mass + "' (expected identity or vi-variance)");
  }
  h.vi_mass = mass == "vi-variance";
  read(j, "divergence_threshold", h.divergence_threshold, w);
  if (j.contains("adapt")) {
    const json& a = j.at("adapt");
    const std::string aw = w + ".adapt";
    check_keys(a, aw, {"enabled", "target_acceptance", "iterations", "probe", "tolerance",
                       "max_rounds"});
    h.adapt.enabled = true;
    read(a, "enabled", h.adapt.enabled, aw);
    read(a, "target_acceptance", h.adapt.target_acceptance, aw);
    read(a, "iterations", h.adapt.iterations, aw);
    read(a, "probe", h.adapt.probe, aw);
    read(a, "tolerance", h.adapt.tolerance, aw);
    read(a, "max_rounds", h.adapt.max_rounds, aw);
  }
  return h;
}

json report_to_json(const ReportBlock& r) {
  return {{"band_range", json::array({r.band_lo, r.band_hi})},
          {"band_points", r.band_points},
          {"scatter", json::array({r.scatter_x, r.scatter_y})},
          {"max_draws", r.max_draws}};
}

ReportBlock report_from_json(const json& j) {
  const std::string w = "report";
  check_keys(j, w, {"band_range", "band_points", "scatter", "max_draws"});
  ReportBlock r;
  if (j.contains("band_range")) {
    const Interval i = interval_from_json(j.at("band_range"), w + ".band_range");
    r.band_lo = i.lo;
    r.band_hi = i.hi;
  }
  read(j, "band_points", r.band_points, w);
  if (j.contains("scatter")) {
    const json& s = j.at("scatter");
    if (!s.is_array() || s.size() != 2) {
      throw ConfigError(w + ".scatter: expected two parameter names");
    }
    r.scatter_x = s[0].get<std::string>();
    r.scatter_y = s[1].get<std::string>();
  }
  read(j, "max_draws", r.max_draws, w);
  return r;
}

json config_to_json(const ExperimentConfig& c) {
  json j = {{"name", c.name},
            {"network", network_to_json(c.network)},
            {"data", data_to_json(c.data)},
            {"prior_variance", c.prior.variance},
            {"likelihood_variance", c.likelihood.noise_variance},
            {"vi", vi_to_json(c.vi)},
            {"hmc", hmc_to_json(c.hmc)},
            {"report", report_to_json(c.report)}};
  if (c.sensitivity) {
    j["sensitivity"] = {{"tau", c.sensitivity->tau},
                        {"rule", to_string(c.sensitivity->rule)},
                        {"histogram_bins", c.sensitivity->histogram_bins}};
  }
  if (!c.partition_path.empty()) {
    j["partition"] = c.partition_path;
  }
  return j;
}

}  // namespace

std::string to_string(SampleMode m) { return m == SampleMode::Full ? "full" : "reduced"; }

SampleMode parse_sample_mode(const std::string& s) {
  if (s == "full") return SampleMode::Full;
  if (s == "reduced") return SampleMode::Reduced;
  throw ConfigError("unknown sampling mode '" + s + "' (expected full or reduced)");
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name: must not be empty");
  network.validate();
  prior.validate();
  likelihood.validate();
  switch (data.kind) {
    case DataKind::Sinusoid:
      data.sinusoid.validate();
      break;
    case DataKind::Burgers:
      data.burgers.validate();
      break;
    case DataKind::Path:
      if (data.path.empty()) throw ConfigError("data.path: must not be empty");
      break;
  }
  const auto& t = vi.train;
  if (t.epochs < 0) throw ConfigError("vi.epochs: must be >= 0");
  if (t.n_mc < 1) throw ConfigError("vi.n_mc: must be >= 1");
  if (t.batch_size < 0) throw ConfigError("vi.batch_size: must be >= 0");
  if (!(t.adam.learning_rate > 0.0)) throw ConfigError("vi.learning_rate: must be positive");
  if (!(vi.sigma0 > 0.0)) throw ConfigError("vi.sigma0: must be positive");
  if (!(vi.init_scale >= 0.0)) throw ConfigError("vi.init_scale: must be >= 0");
  if (sensitivity) {
    if (!(sensitivity->tau > 0.0 && sensitivity->tau <= 1.0)) {
      throw ConfigError("sensitivity.tau: must lie in (0, 1]");
    }
    if (sensitivity->histogram_bins < 1) {
      throw ConfigError("sensitivity.histogram_bins: must be >= 1");
    }
  }
  if (hmc.mode == SampleMode::Reduced && !sensitivity && partition_path.empty()) {
    throw ConfigError("hmc.mode: reduced sampling needs a sensitivity block or a partition path");
  }
  if (!(hmc.step_size > 0.0) || !(hmc.full_step_size > 0.0)) {
    throw ConfigError("hmc.step_size: must be positive");
  }
  const auto& lf = hmc.leapfrog;
  if (lf.kind == LeapfrogBlock::Kind::Fixed && lf.steps < 0) {
    throw ConfigError("hmc.leapfrog.steps: must be >= 0");
  }
  if (lf.kind == LeapfrogBlock::Kind::Heuristic) {
    if (lf.variance_choice != "max" && lf.variance_choice != "median" &&
        lf.variance_choice != "value") {
      throw ConfigError("hmc.leapfrog.heuristic: expected max, median or value, got '" +
                        lf.variance_choice + "'");
    }
    if (lf.variance_choice == "value" && !(lf.variance > 0.0)) {
      throw ConfigError("hmc.leapfrog.variance: must be positive with heuristic 'value'");
    }
  }
  if (lf.max_steps < 1) throw ConfigError("hmc.leapfrog.max_steps: must be >= 1");
  if (hmc.chains < 1) throw ConfigError("hmc.chains: must be >= 1");
  if (hmc.samples < 1) throw ConfigError("hmc.samples: must be >= 1");
  if (hmc.burn_in < 0 || hmc.burn_in >= hmc.samples) {
    throw ConfigError("hmc.burn_in: must lie in [0, samples)");
  }
  if (hmc.init_scale < 0.0) throw ConfigError("hmc.init_scale: must be >= 0");
  if (!(hmc.divergence_threshold > 0.0)) {
    throw ConfigError("hmc.divergence_threshold: must be positive");
  }
  if (hmc.adapt.enabled &&
      !(hmc.adapt.target_acceptance > 0.0 && hmc.adapt.target_acceptance < 1.0)) {
    throw ConfigError("hmc.adapt.target_acceptance: must lie in (0, 1)");
  }
  if (report.band_points < 1 || !(report.band_hi >= report.band_lo)) {
    throw ConfigError("report.band_range: need lo <= hi and at least one point");
  }
  if (report.max_draws < 1) throw ConfigError("report.max_draws: must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"name", "network", "data", "prior_variance", "likelihood_variance",
                           "vi", "sensitivity", "partition", "hmc", "report"});
  ExperimentConfig c;
  read(j, "name", c.name, "config");
  if (!j.contains("network")) throw ConfigError("config: missing 'network'");
  c.network = network_from_json(j.at("network"));
  if (!j.contains("data")) throw ConfigError("config: missing 'data'");
  c.data = data_from_json(j.at("data"));
  read(j, "prior_variance", c.prior.variance, "config");
  read(j, "likelihood_variance", c.likelihood.noise_variance, "config");
  if (j.contains("vi")) c.vi = vi_from_json(j.at("vi"));
  if (j.contains("sensitivity")) {
    const json& s = j.at("sensitivity");
    check_keys(s, "sensitivity", {"tau", "rule", "histogram_bins"});
    SensitivityBlock b;
    read(s, "tau", b.tau, "sensitivity");
    std::string rule = to_string(b.rule);
    read(s, "rule", rule, "sensitivity");
    b.rule = parse_threshold_rule(rule);
    read(s, "histogram_bins", b.histogram_bins, "sensitivity");
    c.sensitivity = b;
  }
  read(j, "partition", c.partition_path, "config");
  if (j.contains("hmc")) c.hmc = hmc_from_json(j.at("hmc"));
  if (j.contains("report")) c.report = report_from_json(j.at("report"));
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  return fnv1a_hex(serialize_config(config));
}

std::string serialize_data(const DataSource& data) { return data_to_json(data).dump(); }

std::string serialize_network(const NetworkSpec& spec) { return network_to_json(spec).dump(); }

NetworkSpec parse_network(const std::string& text) {
  try {
    NetworkSpec n = network_from_json(json::parse(text));
    n.validate();
    return n;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network spec is not valid JSON: ") + e.what());
  }
}

}  // namespace vihmc
