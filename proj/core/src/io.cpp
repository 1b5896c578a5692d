#include "vihmc/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <limits>
#include <system_error>

#include "vihmc/config.hpp"
#include "vihmc/errors.hpp"
#include "vihmc/hash.hpp"

namespace vihmc {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    // Infinite rho (sigma == 0) is stored as null.
    v(static_cast<Index>(i)) =
        j[i].is_null() ? -std::numeric_limits<double>::infinity() : j[i].get<double>();
  }
  return v;
}

json indices_to_json(const std::vector<Index>& v) { return json(v); }

std::vector<Index> indices_from_json(const json& j) { return j.get<std::vector<Index>>(); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool try_parse_double(const std::string& s, double& out) {
  if (s == "nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  if (s == "inf" || s == "-inf") {
    out = (s[0] == '-' ? -1.0 : 1.0) * std::numeric_limits<double>::infinity();
    return true;
  }
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  if (!try_parse_double(s, v)) {
    throw ConfigError("not a number: '" + s + "'");
  }
  return v;
}

bool is_timing_file(const fs::path& path) {
  return path.filename().string().starts_with("timing");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw ConfigError("write failed for " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const fs::path& path, const Eigen::MatrixXd& m,
               const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      out += (i ? "," : "") + header[i];
    }
    out += '\n';
  }
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

Eigen::MatrixXd read_csv(const fs::path& path, std::vector<std::string>* header) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size() && numeric; ++i) {
      numeric = try_parse_double(cells[i], row[i]);
    }
    if (!numeric) {
      if (!first) {
        throw ConfigError(path.string() + ": non-numeric row '" + line + "'");
      }
      if (header) *header = cells;
    } else {
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw ConfigError(path.string() + ": ragged row '" + line + "'");
      }
      rows.push_back(std::move(row));
    }
    first = false;
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return m;
}

void save_posterior(const fs::path& path, const PosteriorArtifact& a) {
  json rho = json::array();
  for (Index i = 0; i < a.posterior.rho.size(); ++i) {
    const double r = a.posterior.rho(i);
    rho.push_back(std::isinf(r) ? json(nullptr) : json(r));
  }
  const json j = {{"version", PosteriorArtifact::kVersion},
                  {"network", json::parse(serialize_network(a.network))},
                  {"network_hash", spec_hash(a.network)},
                  {"prior_variance", a.posterior.prior.variance},
                  {"mu", vector_to_json(a.posterior.mu)},
                  {"rho", rho},
                  {"config_hash", a.config_hash},
                  {"seed", a.seed}};
  write_text(path, j.dump(1) + "\n");
}

PosteriorArtifact load_posterior(const fs::path& path) {
  const json j = read_json(path);
  try {
    if (j.at("version").get<int>() != PosteriorArtifact::kVersion) {
      throw ConfigError(path.string() + ": unsupported posterior version");
    }
    PosteriorArtifact a;
    a.network = parse_network(j.at("network").dump());
    a.posterior.prior.variance = j.at("prior_variance").get<double>();
    a.posterior.mu = vector_from_json(j.at("mu"), "mu");
    a.posterior.rho = vector_from_json(j.at("rho"), "rho");
    a.config_hash = j.at("config_hash").get<std::string>();
    a.seed = j.at("seed").get<std::uint64_t>();
    if (a.posterior.mu.size() != a.network.param_count() ||
        a.posterior.rho.size() != a.network.param_count()) {
      throw ConfigError(path.string() + ": posterior length does not match its network (" +
                        std::to_string(a.network.param_count()) + " parameters)");
    }
    return a;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_history(const fs::path& path, const std::vector<EpochRecord>& history) {
  Eigen::MatrixXd m(static_cast<Index>(history.size()), 6);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    m.row(static_cast<Index>(i)) << h.epoch, h.train_elbo, h.val_elbo, h.train_mse, h.val_mse,
        h.learning_rate;
  }
  write_csv(path, m, {"epoch", "train_elbo", "val_elbo", "train_mse", "val_mse", "learning_rate"});
}

std::vector<EpochRecord> load_history(const fs::path& path) {
  const Eigen::MatrixXd m = read_csv(path);
  std::vector<EpochRecord> out;
  for (Index r = 0; r < m.rows(); ++r) {
    out.push_back({static_cast<int>(m(r, 0)), m(r, 1), m(r, 2), m(r, 3), m(r, 4), m(r, 5)});
  }
  return out;
}

void save_sensitivity(const fs::path& dir, const SensitivityReport& report,
                      const NetworkSpec& spec, int histogram_bins) {
  fs::create_directories(dir);
  const ParamLayout layout = spec.layout();
  std::string out = "rank,index,name,layer,role,score,cumulative\n";
  for (std::size_t r = 0; r < report.ranking.size(); ++r) {
    const Index i = report.ranking[r];
    const LayoutEntry& e = layout.entry_of(i);
    out += std::to_string(r + 1) + "," + std::to_string(i) + "," + layout.name_of(i) + "," +
           e.layer_id + "," + e.role + "," + format_double(report.scores(i)) + "," +
           format_double(report.cumulative(static_cast<Index>(r))) + "\n";
  }
  write_text(dir / "sensitivity.csv", out);

  const ScoreHistogram h = score_histogram(report, histogram_bins);
  Eigen::MatrixXd hm(static_cast<Index>(h.counts.size()), 3);
  const double width = h.counts.empty() ? 0.0 : h.upper / static_cast<double>(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    hm.row(static_cast<Index>(b)) << width * static_cast<double>(b),
        width * static_cast<double>(b + 1), static_cast<double>(h.counts[b]);
  }
  write_csv(dir / "histogram.csv", hm, {"lo", "hi", "count"});

  std::string totals = "layer,role,rows,cols,total\n";
  for (const auto& block : layer_sensitivity_map(report, spec)) {
    write_csv(dir / "layers" / (block.layer_id + "." + block.role + ".csv"), block.scores);
    totals += block.layer_id + "," + block.role + "," + std::to_string(block.scores.rows()) + "," +
              std::to_string(block.scores.cols()) + "," + format_double(block.total()) + "\n";
  }
  write_text(dir / "layers" / "totals.csv", totals);
}

SensitivityReport load_sensitivity(const fs::path& dir) {
  std::istringstream in(read_text(dir / "sensitivity.csv"));
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<Index, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 7) throw ConfigError("sensitivity.csv: malformed row '" + line + "'");
    rows.emplace_back(std::stol(c[1]), parse_double(c[5]));
  }
  Eigen::VectorXd scores(static_cast<Index>(rows.size()));
  for (const auto& [i, s] : rows) {
    if (i < 0 || i >= scores.size()) throw ConfigError("sensitivity.csv: index out of range");
    scores(i) = s;
  }
  return make_report(scores);
}

void save_partition(const fs::path& path, const ParameterPartition& p,
                    const std::string& network_hash) {
  const json j = {{"version", 1},
                  {"network_hash", network_hash},
                  {"total", p.total},
                  {"tau", p.tau},
                  {"rule", to_string(p.rule)},
                  {"cutoff", p.cutoff},
                  {"degenerate", p.degenerate},
                  {"sensitive", indices_to_json(p.sensitive)},
                  {"frozen", indices_to_json(p.frozen)},
                  {"frozen_values", vector_to_json(p.frozen_values)}};
  write_text(path, j.dump(1) + "\n");
}

ParameterPartition load_partition(const fs::path& path, const std::string& expected_network_hash) {
  const json j = read_json(path);
  try {
    const auto recorded = j.at("network_hash").get<std::string>();
    if (!expected_network_hash.empty() && recorded != expected_network_hash) {
      throw ConfigError("partition " + path.string() + " was built for network " + recorded +
                        ", config network is " + expected_network_hash);
    }
    ParameterPartition p;
    p.total = j.at("total").get<Index>();
    p.tau = j.at("tau").get<double>();
    p.rule = parse_threshold_rule(j.at("rule").get<std::string>());
    p.cutoff = j.at("cutoff").get<double>();
    p.degenerate = j.at("degenerate").get<bool>();
    p.sensitive = indices_from_json(j.at("sensitive"));
    p.frozen = indices_from_json(j.at("frozen"));
    p.frozen_values = vector_from_json(j.at("frozen_values"), "frozen_values");
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_archive(const fs::path& dir, const ChainArchive& archive,
                  const std::map<std::string, std::string>& extra) {
  fs::create_directories(dir);
  write_text(dir / "config.snapshot", archive.config_snapshot);
  json chains = json::array();
  std::vector<std::string> header;
  for (const Index i : archive.free_indices) header.push_back("p" + std::to_string(i));
  for (std::size_t c = 0; c < archive.chains.size(); ++c) {
    const ChainRecord& rec = archive.chains[c];
    const fs::path cdir = dir / ("chain_" + std::to_string(c));
    write_csv(cdir / "draws.csv", rec.draws, header);
    Eigen::MatrixXd trace(static_cast<Index>(rec.accepted.size()), 3);
    for (std::size_t s = 0; s < rec.accepted.size(); ++s) {
      trace.row(static_cast<Index>(s)) << rec.accepted[s], rec.hamiltonian[s], rec.step_sizes[s];
    }
    write_csv(cdir / "trace.csv", trace, {"accepted", "hamiltonian", "step_size"});
    if (!rec.adapt_trace.empty()) {
      write_csv(cdir / "adapt.csv",
                Eigen::Map<const Eigen::VectorXd>(rec.adapt_trace.data(),
                                                  static_cast<Index>(rec.adapt_trace.size())),
                {"step_size"});
    }
    chains.push_back({{"seed", rec.seed},
                      {"acceptance", rec.acceptance(archive.burn_in)},
                      {"adapted_step_size", rec.adapted_step_size},
                      {"probe_acceptance", rec.probe_acceptance},
                      {"leapfrog_steps", rec.leapfrog_steps},
                      {"bad", rec.bad},
                      {"bad_reason", rec.bad_reason}});
  }
  const json m = {{"version", archive.version},
                  {"samples", archive.samples},
                  {"burn_in", archive.burn_in},
                  {"free_indices", indices_to_json(archive.free_indices)},
                  {"frozen_indices", indices_to_json(archive.frozen_indices)},
                  {"frozen_values", vector_to_json(archive.frozen_values)},
                  {"chains", chains},
                  {"extra", extra}};
  write_text(dir / "manifest.json", m.dump(1) + "\n");
  json seconds = json::array();
  for (const auto& rec : archive.chains) seconds.push_back(rec.seconds);
  write_text(dir / "timing.json", json{{"chain_seconds", seconds}}.dump(1) + "\n");
}

ChainArchive load_archive(const fs::path& dir, std::map<std::string, std::string>* extra) {
  const json m = read_json(dir / "manifest.json");
  try {
    ChainArchive a;
    a.version = m.at("version").get<int>();
    if (a.version > ChainArchive::kVersion) {
      throw ConfigError(dir.string() + ": archive version " + std::to_string(a.version) +
                        " is newer than this tool");
    }
    a.samples = m.at("samples").get<int>();
    a.burn_in = m.at("burn_in").get<int>();
    a.free_indices = indices_from_json(m.at("free_indices"));
    a.frozen_indices = indices_from_json(m.at("frozen_indices"));
    a.frozen_values = vector_from_json(m.at("frozen_values"), "frozen_values");
    a.config_snapshot = read_text(dir / "config.snapshot");
    const auto& chains = m.at("chains");
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const fs::path cdir = dir / ("chain_" + std::to_string(c));
      ChainRecord rec;
      const json& jc = chains[c];
      rec.seed = jc.at("seed").get<std::uint64_t>();
      rec.adapted_step_size = jc.at("adapted_step_size").get<double>();
      rec.probe_acceptance = jc.at("probe_acceptance").get<double>();
      rec.leapfrog_steps = jc.at("leapfrog_steps").get<int>();
      rec.bad = jc.at("bad").get<bool>();
      rec.bad_reason = jc.at("bad_reason").get<std::string>();
      rec.draws = read_csv(cdir / "draws.csv");
      if (rec.draws.rows() == 0) {
        rec.draws.resize(0, static_cast<Index>(a.free_indices.size()));
      }
      const Eigen::MatrixXd trace = read_csv(cdir / "trace.csv");
      for (Index s = 0; s < trace.rows(); ++s) {
        rec.accepted.push_back(static_cast<std::uint8_t>(trace(s, 0)));
        rec.hamiltonian.push_back(trace(s, 1));
        rec.step_sizes.push_back(trace(s, 2));
      }
      if (fs::exists(cdir / "adapt.csv")) {
        const Eigen::MatrixXd ad = read_csv(cdir / "adapt.csv");
        rec.adapt_trace.assign(ad.data(), ad.data() + ad.size());
      }
      a.chains.push_back(std::move(rec));
    }
    if (fs::exists(dir / "timing.json")) {
      const json t = read_json(dir / "timing.json");
      const auto seconds = t.at("chain_seconds").get<std::vector<double>>();
      for (std::size_t c = 0; c < seconds.size() && c < a.chains.size(); ++c) {
        a.chains[c].seconds = seconds[c];
      }
    }
    if (extra) *extra = m.at("extra").get<std::map<std::string, std::string>>();
    return a;
  } catch (const json::exception& e) {
    throw ConfigError(dir.string() + ": " + e.what());
  }
}

void save_dataset(const fs::path& dir, const Dataset& train, const Dataset& val,
                  const std::string& spec_echo) {
  fs::create_directories(dir);
  write_csv(dir / "train_inputs.csv", train.inputs);
  write_csv(dir / "train_targets.csv", train.targets);
  write_csv(dir / "val_inputs.csv", val.inputs);
  write_csv(dir / "val_targets.csv", val.targets);
  if (train.kind == DatasetKind::Operator) {
    write_csv(dir / "queries.csv", train.queries);
  }
  json spec;
  try {
    spec = json::parse(spec_echo);
  } catch (const json::exception&) {
    spec = spec_echo;
  }
  const json m = {{"version", 1},
                  {"kind", train.kind == DatasetKind::Operator ? "operator" : "function"},
                  {"noise_sigma", train.noise_sigma},
                  {"seed", train.seed},
                  {"source", train.source},
                  {"spec", spec},
                  {"hash", dataset_hash(dir)}};
  write_text(dir / "manifest.json", m.dump(1) + "\n");
}

std::pair<Dataset, Dataset> load_dataset(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  const std::string recorded = m.at("hash").get<std::string>();
  const std::string actual = dataset_hash(dir);
  if (recorded != actual) {
    throw QualityError("dataset " + dir.string() + " content hash " + actual +
                       " does not match its manifest (" + recorded + ")");
  }
  Dataset base;
  base.kind = m.at("kind").get<std::string>() == "operator" ? DatasetKind::Operator
                                                            : DatasetKind::Function;
  base.noise_sigma = m.at("noise_sigma").get<double>();
  base.seed = m.at("seed").get<std::uint64_t>();
  base.source = m.at("source").get<std::string>();
  if (base.kind == DatasetKind::Operator) base.queries = read_csv(dir / "queries.csv");
  Dataset train = base;
  Dataset val = base;
  train.inputs = read_csv(dir / "train_inputs.csv");
  train.targets = read_csv(dir / "train_targets.csv");
  val.inputs = read_csv(dir / "val_inputs.csv");
  val.targets = read_csv(dir / "val_targets.csv");
  train.validate();
  val.validate();
  return {std::move(train), std::move(val)};
}

std::string dataset_hash(const fs::path& dir) {
  std::string all;
  for (const char* f : {"train_inputs.csv", "train_targets.csv", "val_inputs.csv",
                        "val_targets.csv", "queries.csv"}) {
    if (fs::exists(dir / f)) {
      all += std::string(f) + ":" + file_hash(dir / f) + ";";
    }
  }
  return fnv1a_hex(all);
}

void RunManifest::add(const std::string& role, const fs::path& base, const fs::path& relative) {
  const fs::path full = base / relative;
  std::string hash;
  if (fs::is_directory(full)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(full)) {
      if (e.is_regular_file() && !is_timing_file(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) {
      all += fs::relative(f, full).generic_string() + ":" + file_hash(f) + ";";
    }
    hash = fnv1a_hex(all);
  } else {
    hash = file_hash(full);
  }
  for (auto& a : artifacts) {
    if (a.role == role) {
      a = {role, relative.generic_string(), hash};
      return;
    }
  }
  artifacts.push_back({role, relative.generic_string(), hash});
}

void save_manifest(const fs::path& path, const RunManifest& m) {
  json arts = json::array();
  for (const auto& a : m.artifacts) {
    arts.push_back({{"role", a.role}, {"path", a.path}, {"hash", a.hash}});
  }
  const json j = {{"version", RunManifest::kVersion},
                  {"tool_version", m.tool_version},
                  {"config_hash", m.config_hash},
                  {"command", m.command},
                  {"artifacts", arts},
                  {"stage_seconds", m.stage_seconds},
                  {"notes", m.notes}};
  write_text(path, j.dump(1) + "\n");
}

RunManifest load_manifest(const fs::path& path) {
  const json j = read_json(path);
  try {
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.command = j.at("command").get<std::string>();
    for (const auto& a : j.at("artifacts")) {
      m.artifacts.push_back({a.at("role").get<std::string>(), a.at("path").get<std::string>(),
                             a.at("hash").get<std::string>()});
    }
    m.stage_seconds = j.at("stage_seconds").get<std::map<std::string, double>>();
    m.notes = j.at("notes").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void verify_manifest(const fs::path& path) {
  const RunManifest m = load_manifest(path);
  const fs::path base = path.parent_path();
  for (const auto& a : m.artifacts) {
    if (!fs::exists(base / a.path)) {
      throw QualityError("manifest " + path.string() + ": missing artifact " + a.path);
    }
    RunManifest probe;
    probe.add(a.role, base, a.path);
    if (probe.artifacts.front().hash != a.hash) {
      throw QualityError("manifest " + path.string() + ": artifact " + a.path +
                         " changed (hash " + probe.artifacts.front().hash + ", recorded " +
                         a.hash + ")");
    }
  }
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) {
    throw ConfigError("run directory " + dir.string() +
                      " is locked by another process (remove " + path_.string() +
                      " if that process is gone)");
  }
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace vihmc
