#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace vihmc {

using Eigen::Index;

/// One contiguous block of the flat parameter vector. Matrices are stored
/// row-major: element (r, c) lives at offset + r * cols + c.
struct LayoutEntry {
  std::string layer_id;
  std::string role;  // "weight", "bias" or "scalar"
  Index rows = 0;
  Index cols = 0;
  Index offset = 0;

  [[nodiscard]] Index size() const { return rows * cols; }
};

/// Maps flat parameter indices to named network blocks.
class ParamLayout {
 public:
  ParamLayout() = default;

  /// Appends a block after the current end and returns its offset.
  Index append(std::string layer_id, std::string role, Index rows, Index cols);

  [[nodiscard]] Index total() const { return total_; }
  [[nodiscard]] const std::vector<LayoutEntry>& entries() const { return entries_; }
  /// Block containing flat index i.
  [[nodiscard]] const LayoutEntry& entry_of(Index i) const;
  /// Human-readable parameter name, e.g. "branch.0.weight[3,1]".
  [[nodiscard]] std::string name_of(Index i) const;

  /// Throws ConfigError unless offsets are disjoint and cover [0, total).
  void validate() const;

  [[nodiscard]] std::vector<Eigen::MatrixXd> unflatten(const Eigen::VectorXd& flat) const;
  [[nodiscard]] Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd>& blocks) const;

 private:
  std::vector<LayoutEntry> entries_;
  Index total_ = 0;
};

struct ParamVector {
  Eigen::VectorXd values;
  ParamLayout layout;
};

}  // namespace vihmc
