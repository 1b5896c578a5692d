#include "vihmc/param_vector.hpp"

#include <algorithm>

#include "vihmc/errors.hpp"

namespace vihmc {

Index ParamLayout::append(std::string layer_id, std::string role, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) {
    throw ConfigError("layer " + layer_id + ": empty " + role + " block");
  }
  entries_.push_back({std::move(layer_id), std::move(role), rows, cols, total_});
  total_ += rows * cols;
  return entries_.back().offset;
}

const LayoutEntry& ParamLayout::entry_of(Index i) const {
  if (i < 0 || i >= total_) {
    throw ConfigError("parameter index " + std::to_string(i) + " out of range [0, " +
                      std::to_string(total_) + ")");
  }
  auto it = std::upper_bound(entries_.begin(), entries_.end(), i,
                             [](Index v, const LayoutEntry& e) { return v < e.offset; });
  return *std::prev(it);
}

std::string ParamLayout::name_of(Index i) const {
  const LayoutEntry& e = entry_of(i);
  const Index local = i - e.offset;
  std::string name = e.layer_id + "." + e.role;
  if (e.role == "weight") {
    name += "[" + std::to_string(local / e.cols) + "," + std::to_string(local % e.cols) + "]";
  } else if (e.size() > 1) {
    name += "[" + std::to_string(local) + "]";
  }
  return name;
}

void ParamLayout::validate() const {
  Index expected = 0;
  for (const auto& e : entries_) {
    if (e.offset != expected || e.size() <= 0) {
      throw ConfigError("parameter layout is not contiguous at layer " + e.layer_id);
    }
    expected += e.size();
  }
  if (expected != total_) {
    throw ConfigError("parameter layout extents do not sum to the parameter count");
  }
}

std::vector<Eigen::MatrixXd> ParamLayout::unflatten(const Eigen::VectorXd& flat) const {
  if (flat.size() != total_) {
    throw ConfigError("flat vector has " + std::to_string(flat.size()) + " entries, layout has " +
                      std::to_string(total_));
  }
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(entries_.size());
  for (const auto& e : entries_) {
    Eigen::MatrixXd m(e.rows, e.cols);
    for (Index r = 0; r < e.rows; ++r) {
      for (Index c = 0; c < e.cols; ++c) {
        m(r, c) = flat(e.offset + r * e.cols + c);
      }
    }
    blocks.push_back(std::move(m));
  }
  return blocks;
}

Eigen::VectorXd ParamLayout::flatten(const std::vector<Eigen::MatrixXd>& blocks) const {
  if (blocks.size() != entries_.size()) {
    throw ConfigError("block count does not match layout");
  }
  Eigen::VectorXd flat(total_);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& e = entries_[k];
    if (blocks[k].rows() != e.rows || blocks[k].cols() != e.cols) {
      throw ConfigError("block shape mismatch for layer " + e.layer_id);
    }
    for (Index r = 0; r < e.rows; ++r) {
      for (Index c = 0; c < e.cols; ++c) {
        flat(e.offset + r * e.cols + c) = blocks[k](r, c);
      }
    }
  }
  return flat;
}

}  // namespace vihmc
