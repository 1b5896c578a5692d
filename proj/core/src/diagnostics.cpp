#include "vihmc/diagnostics.hpp"

#include <boost/math/distributions/normal.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "vihmc/errors.hpp"

namespace vihmc {

namespace {

double sample_variance(const Eigen::VectorXd& x) {
  const double n = static_cast<double>(x.size());
  return (x.array() - x.mean()).square().sum() / (n - 1.0);
}

// Splits every chain in half (dropping the middle draw of odd lengths).
Eigen::MatrixXd split_chains(const Eigen::MatrixXd& draws) {
  const Index half = draws.rows() / 2;
  Eigen::MatrixXd out(half, 2 * draws.cols());
  for (Index c = 0; c < draws.cols(); ++c) {
    out.col(2 * c) = draws.col(c).head(half);
    out.col(2 * c + 1) = draws.col(c).tail(half);
  }
  return out;
}

Eigen::MatrixXd rank_normalize(const Eigen::MatrixXd& draws) {
  const Index s = draws.size();
  std::vector<Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), Index{0});
  const double* v = draws.data();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
  Eigen::MatrixXd z(draws.rows(), draws.cols());
  double* out = z.data();
  const boost::math::normal_distribution<double> normal;
  for (Index i = 0; i < s;) {
    Index j = i;
    while (j + 1 < s && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank of the tie
    const double p = (rank - 0.375) / (static_cast<double>(s) + 0.25);
    const double q = boost::math::quantile(normal, p);
    for (Index k = i; k <= j; ++k) out[order[k]] = q;
    i = j + 1;
  }
  return z;
}

}  // namespace

double split_rhat(const Eigen::MatrixXd& draws) {
  const Index n = draws.rows();
  const Index m = draws.cols();
  if (n < 2 || m < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  Eigen::VectorXd means(m);
  Eigen::VectorXd vars(m);
  for (Index c = 0; c < m; ++c) {
    means(c) = draws.col(c).mean();
    vars(c) = sample_variance(draws.col(c));
  }
  const double w = vars.mean();
  const double b_over_n = sample_variance(means);
  const double nd = static_cast<double>(n);
  const double var_plus = (nd - 1.0) / nd * w + b_over_n;
  if (!(w > 0.0)) {
    return var_plus > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  return std::sqrt(var_plus / w);
}

double rank_normalized_split_rhat(const Eigen::MatrixXd& draws) {
  const Eigen::MatrixXd split = split_chains(draws);
  const double bulk = split_rhat(rank_normalize(split));
  std::vector<double> all(split.data(), split.data() + split.size());
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2),
                   all.end());
  const double median = all[all.size() / 2];
  const Eigen::MatrixXd folded = (split.array() - median).abs().matrix();
  const double tail = split_rhat(rank_normalize(folded));
  return std::max(bulk, tail);
}

Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Index n = x.size();
  Index len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> padded(static_cast<std::size_t>(len), 0.0);
  const double mean = x.mean();
  for (Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = x(i) - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::complex<double>(std::norm(f), 0.0);
  std::vector<double> back;
  fft.inv(back, freq);
  Eigen::VectorXd acov(n);
  for (Index k = 0; k < n; ++k) acov(k) = back[static_cast<std::size_t>(k)] / static_cast<double>(n);
  return acov;
}

double effective_sample_size(const Eigen::MatrixXd& draws) {
  const Index n = draws.rows();
  const Index m = draws.cols();
  if (n < 4 || m < 1) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double nd = static_cast<double>(n);
  std::vector<Eigen::VectorXd> acov(static_cast<std::size_t>(m));
  Eigen::VectorXd means(m);
  Eigen::VectorXd vars(m);
  for (Index c = 0; c < m; ++c) {
    acov[static_cast<std::size_t>(c)] = autocovariance(draws.col(c));
    means(c) = draws.col(c).mean();
    vars(c) = acov[static_cast<std::size_t>(c)](0) * nd / (nd - 1.0);
  }
  const double mean_var = vars.mean();
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += sample_variance(means);
  if (!(var_plus > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  auto mean_acov = [&](Index lag) {
    double s = 0.0;
    for (const auto& a : acov) s += a(lag);
    return s / static_cast<double>(m);
  };

  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho(0) = rho_even;
  rho(1) = rho_odd;
  Index t = 1;
  while (t < n - 5 && std::isfinite(rho_even + rho_odd) && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho(t + 1) = rho_even;
      rho(t + 2) = rho_odd;
    }
    t += 2;
  }
  const Index max_t = t;
  if (rho_even > 0.0) rho(max_t + 1) = rho_even;

  // Initial monotone sequence.
  for (t = 1; t <= max_t - 4; t += 2) {
    if (rho(t + 1) + rho(t + 2) > rho(t - 1) + rho(t)) {
      rho(t + 1) = 0.5 * (rho(t - 1) + rho(t));
      rho(t + 2) = rho(t + 1);
    }
  }
  const double total = static_cast<double>(m) * nd;
  double tau = -1.0 + 2.0 * rho.head(max_t + 1).sum() + rho(max_t + 1);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

ChainDiagnostics diagnostics(const ChainArchive& archive) {
  ChainDiagnostics out;
  std::vector<const ChainRecord*> use;
  for (const auto& c : archive.chains) {
    if (c.bad) {
      ++out.bad_chains;
    } else {
      use.push_back(&c);
    }
  }
  if (use.empty()) {
    for (const auto& c : archive.chains) use.push_back(&c);
    out.notice = "every chain is flagged bad; diagnostics use all chains";
  }

  long accepted = 0;
  long proposals = 0;
  double seconds = 0.0;
  long total_samples = 0;
  for (const auto* c : use) {
    for (std::size_t s = static_cast<std::size_t>(archive.burn_in); s < c->accepted.size(); ++s) {
      accepted += c->accepted[s];
      ++proposals;
    }
    seconds += c->seconds;
    total_samples += static_cast<long>(c->accepted.size());
  }
  out.acceptance_rate = proposals > 0 ? static_cast<double>(accepted) / proposals : 0.0;
  out.seconds_per_sample = total_samples > 0 ? seconds / static_cast<double>(total_samples) : 0.0;

  const Index d = archive.dim();
  const Index kept = use.front()->draws.rows();
  const Index m = static_cast<Index>(use.size());
  out.ess.resize(d);
  if (m >= 2) {
    out.rhat.resize(d);
  } else {
    out.notice += (out.notice.empty() ? "" : "; ") + std::string("single chain: R-hat omitted");
  }
  Eigen::MatrixXd coord(kept, m);
  for (Index i = 0; i < d; ++i) {
    for (Index c = 0; c < m; ++c) coord.col(c) = use[static_cast<std::size_t>(c)]->draws.col(i);
    out.ess(i) = effective_sample_size(coord);
    if (m >= 2) out.rhat(i) = rank_normalized_split_rhat(coord);
  }
  return out;
}

}  // namespace vihmc
