#include <doctest.h>

#include "support.hpp"
#include "vihmc/diagnostics.hpp"
#include "vihmc/dual_averaging.hpp"
#include "vihmc/errors.hpp"

using namespace vihmc;
using namespace vihmc::testing;

TEST_CASE("ESS of independent draws is close to the draw count") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd d = randn(2000, 4, rng);
  const double ess = effective_sample_size(d);
  CHECK(ess > 0.8 * 8000);
  CHECK(ess < 1.2 * 8000);
}

TEST_CASE("ESS of an AR(1) chain matches its integrated autocorrelation") {
  // tau = (1 + rho) / (1 - rho) = 3 for rho = 0.5.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::MatrixXd d(20000, 2);
  for (Index c = 0; c < 2; ++c) {
    double x = n(rng);
    for (Index i = 0; i < d.rows(); ++i) {
      x = 0.5 * x + std::sqrt(0.75) * n(rng);
      d(i, c) = x;
    }
  }
  CHECK(effective_sample_size(d) == doctest::Approx(40000.0 / 3.0).epsilon(0.2));
}

TEST_CASE("antithetic chains exceed the draw count") {
  Eigen::MatrixXd d(1000, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  double x = 0.0;
  for (Index i = 0; i < d.rows(); ++i) {
    x = -0.6 * x + 0.8 * n(rng);
    d(i, 0) = x;
  }
  double y = 0.0;
  for (Index i = 0; i < d.rows(); ++i) {
    y = -0.6 * y + 0.8 * n(rng);
    d(i, 1) = y;
  }
  CHECK(effective_sample_size(d) > 2000.0);
}

TEST_CASE("split R-hat flags chains stuck in different places") {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd good = randn(1000, 4, rng);
  CHECK(split_rhat(good) < 1.01);
  CHECK(rank_normalized_split_rhat(good) < 1.01);
  Eigen::MatrixXd bad = good;
  bad.col(0).array() += 3.0;
  CHECK(split_rhat(bad) > 1.1);
  CHECK(rank_normalized_split_rhat(bad) > 1.1);
  // A trend inside a single chain is caught by splitting.
  Eigen::MatrixXd trend = good;
  for (Index i = 0; i < 1000; ++i) trend(i, 1) += 4.0 * static_cast<double>(i) / 1000.0;
  CHECK(split_rhat(trend) > 1.05);
}

TEST_CASE("autocovariance at lag zero is the biased variance") {
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  const Eigen::VectorXd a = autocovariance(x);
  REQUIRE(a.size() == 4);
  CHECK(a(0) == doctest::Approx(1.25));
  CHECK(a(1) == doctest::Approx((-1.5 * -0.5 + -0.5 * 0.5 + 0.5 * 1.5) / 4.0));
}

TEST_CASE("archive diagnostics") {
  ChainArchive a;
  a.samples = 10;
  a.burn_in = 4;
  a.free_indices = {0};
  for (int c = 0; c < 2; ++c) {
    ChainRecord r;
    std::mt19937_64 rng(c);
    r.draws = randn(6, 1, rng);
    r.accepted.assign(10, c == 0 ? 1 : 0);
    r.seconds = 1.0;
    a.chains.push_back(r);
  }
  CHECK(a.chains[1].acceptance(4) == 0.0);
  CHECK(a.chains[0].acceptance(4) == 1.0);
  const ChainDiagnostics d = diagnostics(a);
  CHECK(d.acceptance_rate == doctest::Approx(0.5));
  CHECK(d.rhat.size() == 1);
  CHECK(d.seconds_per_sample == doctest::Approx(0.1));
}

TEST_CASE("dual averaging drives a monotone acceptance curve to its target") {
  // Acceptance exp(-eps) has target eps* = -log(0.8).
  DualAveraging da(1.0, {.target = 0.8});
  for (int i = 0; i < 2000; ++i) da.update(std::exp(-da.step()));
  CHECK(da.final_step() == doctest::Approx(-std::log(0.8)).epsilon(0.02));
}
