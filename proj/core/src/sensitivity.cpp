#include "vihmc/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vihmc/errors.hpp"

namespace vihmc {

std::vector<Index> SensitivityReport::rank_of() const {
  std::vector<Index> pos(ranking.size());
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    pos[static_cast<std::size_t>(ranking[r])] = static_cast<Index>(r);
  }
  return pos;
}

SensitivityReport make_report(const Eigen::VectorXd& scores) {
  SensitivityReport report;
  report.scores = scores;
  const Index n = scores.size();
  report.ranking.resize(static_cast<std::size_t>(n));
  std::iota(report.ranking.begin(), report.ranking.end(), Index{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](Index a, Index b) { return scores(a) > scores(b); });
  report.total = scores.sum();
  report.cumulative = Eigen::VectorXd::Zero(n);
  if (report.total > 0.0) {
    double running = 0.0;
    for (Index r = 0; r < n; ++r) {
      running += scores(report.ranking[static_cast<std::size_t>(r)]);
      report.cumulative(r) = running / report.total;
    }
    report.cumulative(n - 1) = 1.0;
  }
  return report;
}

SensitivityReport compute_sensitivities(const VariationalPosterior& q, const NetworkSpec& net,
                                        const Dataset& data) {
  data.validate();
  const Index n = net.param_count();
  if (q.mu.size() != n || q.rho.size() != n) {
    throw ConfigError("compute_sensitivities: posterior does not match network");
  }
  Eigen::VectorXd squared = Eigen::VectorXd::Zero(n);
  ad::Tape tape;

  auto accumulate = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    tape.clear();
    ad::Var theta = tape.variable(q.mu);
    ad::Var out = build_network(tape, net, theta, x, y);
    for (Index c = 0; c < out.cols(); ++c) {
      tape.backward(out, 0, c);
      squared += tape.adjoint(theta).col(0).cwiseAbs2();
    }
  };

  if (data.kind == DatasetKind::Function) {
    for (Index j = 0; j < data.count(); ++j) {
      accumulate(data.inputs.row(j), Eigen::MatrixXd());
    }
  } else {
    for (Index f = 0; f < data.count(); ++f) {
      const Eigen::MatrixXd u = data.inputs.row(f);
      for (Index k = 0; k < data.queries.rows(); ++k) {
        accumulate(u, data.queries.row(k));
      }
    }
  }

  const Eigen::VectorXd sigma = q.sigma();
  const Eigen::VectorXd scores =
      sigma.cwiseAbs2().cwiseProduct(squared) / static_cast<double>(data.records());
  return make_report(scores);
}

std::string to_string(ThresholdRule rule) {
  return rule == ThresholdRule::AtLeast ? "at_least" : "at_most";
}

ThresholdRule parse_threshold_rule(const std::string& s) {
  if (s == "at_least" || s == ">=") return ThresholdRule::AtLeast;
  if (s == "at_most" || s == "<=") return ThresholdRule::AtMost;
  throw ConfigError("unknown threshold rule '" + s + "' (expected at_least or at_most)");
}

void ParameterPartition::validate() const {
  std::vector<int> seen(static_cast<std::size_t>(total), 0);
  auto mark = [&](const std::vector<Index>& idx, const char* what) {
    for (Index i : idx) {
      if (i < 0 || i >= total) {
        throw ConfigError(std::string("partition: ") + what + " index " + std::to_string(i) +
                          " out of range");
      }
      if (seen[static_cast<std::size_t>(i)]++ != 0) {
        throw ConfigError("partition: index " + std::to_string(i) + " appears twice");
      }
    }
  };
  mark(sensitive, "sensitive");
  mark(frozen, "frozen");
  if (sensitive.size() + frozen.size() != static_cast<std::size_t>(total)) {
    throw ConfigError("partition does not cover every parameter");
  }
  if (frozen_values.size() != static_cast<Index>(frozen.size())) {
    throw ConfigError("partition: frozen value count does not match frozen indices");
  }
}

ParameterPartition ParameterPartition::all_free(Index total) {
  ParameterPartition p;
  p.total = total;
  p.sensitive.resize(static_cast<std::size_t>(total));
  std::iota(p.sensitive.begin(), p.sensitive.end(), Index{0});
  p.frozen_values.resize(0);
  p.tau = 1.0;
  return p;
}

ParameterPartition select_partition(const SensitivityReport& report, const VariationalPosterior& q,
                                    double tau, ThresholdRule rule) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ConfigError("tau must lie in (0, 1]");
  }
  const Index n = report.scores.size();
  if (q.mu.size() != n) {
    throw ConfigError("select_partition: posterior does not match report");
  }
  constexpr double kSlack = 1e-12;

  ParameterPartition p;
  p.total = n;
  p.tau = tau;
  p.rule = rule;

  Index keep = 0;
  if (!(report.total > 0.0)) {
    p.degenerate = true;
  } else if (rule == ThresholdRule::AtLeast) {
    keep = n;
    for (Index r = 0; r < n; ++r) {
      if (report.cumulative(r) >= tau - kSlack) {
        keep = r + 1;
        break;
      }
    }
  } else {
    for (Index r = 0; r < n; ++r) {
      if (report.cumulative(r) <= tau + kSlack) {
        keep = r + 1;
      } else {
        break;
      }
    }
  }

  const auto split = report.ranking.begin() + keep;
  p.sensitive.assign(report.ranking.begin(), split);
  p.frozen.assign(split, report.ranking.end());
  std::sort(p.sensitive.begin(), p.sensitive.end());
  std::sort(p.frozen.begin(), p.frozen.end());
  p.frozen_values.resize(static_cast<Index>(p.frozen.size()));
  for (std::size_t k = 0; k < p.frozen.size(); ++k) {
    p.frozen_values(static_cast<Index>(k)) = q.mu(p.frozen[k]);
  }
  p.cutoff = keep < n ? report.scores(report.ranking[static_cast<std::size_t>(keep)]) : 0.0;
  return p;
}

std::vector<LayerSensitivity> layer_sensitivity_map(const SensitivityReport& report,
                                                    const NetworkSpec& spec) {
  const ParamLayout layout = spec.layout();
  if (layout.total() != report.scores.size()) {
    throw ConfigError("sensitivity report has " + std::to_string(report.scores.size()) +
                      " entries, network has " + std::to_string(layout.total()));
  }
  const auto blocks = layout.unflatten(report.scores);
  std::vector<LayerSensitivity> out;
  out.reserve(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& e = layout.entries()[k];
    out.push_back({e.layer_id, e.role, blocks[k]});
  }
  return out;
}

ScoreHistogram score_histogram(const SensitivityReport& report, int bins, double quantile) {
  if (bins < 1) {
    throw ConfigError("histogram needs at least one bin");
  }
  ScoreHistogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const Index n = report.scores.size();
  if (n == 0) {
    return h;
  }
  std::vector<double> sorted(report.scores.data(), report.scores.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double qpos = std::clamp(quantile, 0.0, 1.0) * static_cast<double>(n - 1);
  h.upper = sorted[static_cast<std::size_t>(std::ceil(qpos))];
  const double width = h.upper / bins;
  for (Index i = 0; i < n; ++i) {
    int b = width > 0.0 ? static_cast<int>(report.scores(i) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace vihmc
