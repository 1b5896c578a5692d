#pragma once

// Artifact persistence: CSV matrices, posterior / partition JSON, chain
// archives, dataset directories and run manifests.

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vihmc/hmc.hpp"
#include "vihmc/network.hpp"
#include "vihmc/sensitivity.hpp"
#include "vihmc/vi.hpp"

namespace vihmc {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Comma-separated matrix with an optional header row.
void write_csv(const fs::path& path, const Eigen::MatrixXd& m,
               const std::vector<std::string>& header = {});
/// Reads a numeric CSV; a first line that does not parse as numbers is
/// returned as the header.
Eigen::MatrixXd read_csv(const fs::path& path, std::vector<std::string>* header = nullptr);

struct PosteriorArtifact {
  static constexpr int kVersion = 1;
  VariationalPosterior posterior;
  NetworkSpec network;
  std::string config_hash;
  std::uint64_t seed = 0;
};

void save_posterior(const fs::path& path, const PosteriorArtifact& a);
PosteriorArtifact load_posterior(const fs::path& path);

void save_history(const fs::path& path, const std::vector<EpochRecord>& history);
std::vector<EpochRecord> load_history(const fs::path& path);

/// Writes `sensitivity.csv` (rank, index, name, layer, role, score,
/// cumulative), `histogram.csv` and one `layers/<layer>.<role>.csv` per block.
void save_sensitivity(const fs::path& dir, const SensitivityReport& report,
                      const NetworkSpec& spec, int histogram_bins);
/// Scores read back from `sensitivity.csv`.
SensitivityReport load_sensitivity(const fs::path& dir);

void save_partition(const fs::path& path, const ParameterPartition& p,
                    const std::string& network_hash);
/// Throws ConfigError if the recorded network hash differs from the
/// expected one (when `expected_network_hash` is non-empty).
ParameterPartition load_partition(const fs::path& path,
                                  const std::string& expected_network_hash = {});

/// Wall-clock measurements live in files whose names start with "timing";
/// they are excluded from content hashes.
bool is_timing_file(const fs::path& path);

/// Directory layout: config.snapshot, manifest.json, timing.json,
/// chain_<k>/draws.csv, chain_<k>/trace.csv (accepted, hamiltonian,
/// step_size per proposal).
void save_archive(const fs::path& dir, const ChainArchive& archive,
                  const std::map<std::string, std::string>& extra = {});
ChainArchive load_archive(const fs::path& dir, std::map<std::string, std::string>* extra = nullptr);

/// Dataset directory: {train,val}_{inputs,targets}.csv, queries.csv for
/// operator data, manifest.json with the spec echo and content hash.
void save_dataset(const fs::path& dir, const Dataset& train, const Dataset& val,
                  const std::string& spec_echo);
std::pair<Dataset, Dataset> load_dataset(const fs::path& dir);
/// Hash over the CSV files of a dataset directory.
std::string dataset_hash(const fs::path& dir);

struct ArtifactEntry {
  std::string role;
  std::string path;  // relative to the manifest's directory
  std::string hash;
};

struct RunManifest {
  static constexpr int kVersion = 1;
  std::string tool_version;
  std::string config_hash;
  std::string command;
  std::vector<ArtifactEntry> artifacts;
  std::map<std::string, double> stage_seconds;
  std::map<std::string, std::string> notes;

  /// Hashes the file (relative to `base`) and records it.
  void add(const std::string& role, const fs::path& base, const fs::path& relative);
};

void save_manifest(const fs::path& path, const RunManifest& m);
RunManifest load_manifest(const fs::path& path);
/// Throws QualityError if any artifact is missing or its hash changed.
void verify_manifest(const fs::path& path);

/// Exclusive ownership of a run directory for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

}  // namespace vihmc
