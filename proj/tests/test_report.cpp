#include <doctest.h>

#include "support.hpp"
#include "vihmc/errors.hpp"
#include "vihmc/pipeline.hpp"
#include "vihmc/report.hpp"

using namespace vihmc;
using namespace vihmc::testing;

namespace {

ChainArchive normal_archive(Index dim, int samples, int burn_in, std::uint64_t seed) {
  ChainArchive a;
  a.samples = samples;
  a.burn_in = burn_in;
  for (Index i = 0; i < dim; ++i) a.free_indices.push_back(i);
  std::mt19937_64 rng(seed);
  ChainRecord r;
  r.draws = randn(samples - burn_in, dim, rng);
  r.accepted.assign(static_cast<std::size_t>(samples), 1);
  a.chains.push_back(r);
  return a;
}

}  // namespace

TEST_CASE("summary of a standard normal archive") {
  const ChainArchive a = normal_archive(3, 20000, 0, 1);
  const MethodSummary s = summarize_archive(a, 3, "HMC");
  CHECK(s.mean.cwiseAbs().maxCoeff() < 0.03);
  CHECK((s.sd.array() - 1.0).abs().maxCoeff() < 0.03);
}

TEST_CASE("frozen coordinates report their pinned value") {
  ChainArchive a = normal_archive(2, 100, 0, 2);
  a.free_indices = {0, 2};
  a.frozen_indices = {1};
  a.frozen_values = Eigen::VectorXd::Constant(1, 4.5);
  const MethodSummary s = summarize_archive(a, 3, "VI-HMC");
  CHECK(s.mean(1) == 4.5);
  CHECK(s.sd(1) == 0.0);
  const Eigen::MatrixXd full = full_draws(a, 3, 10);
  CHECK(full.rows() == 10);
  CHECK((full.col(1).array() == 4.5).all());
}

TEST_CASE("an archive without kept draws is an error") {
  ChainArchive a;
  a.samples = 10;
  a.burn_in = 10;
  a.free_indices = {0};
  ChainRecord r;
  r.draws.resize(0, 1);
  a.chains.push_back(r);
  CHECK_THROWS_AS(summarize_archive(a, 1, "HMC"), QualityError);
}

TEST_CASE("unknown parameter names list the alternatives") {
  try {
    parameter_index(case1_net(), "layer9.weight[0,0]");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("layer1.weight[0,1]") != std::string::npos);
  }
  CHECK(parameter_index(case1_net(), "layer0.bias[1]") == 3);
  CHECK(parameter_index(case1_net(), "5") == 5);
}

TEST_CASE("zero-variance predictive band has zero width") {
  VariationalPosterior q;
  q.mu = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  q.rho = Eigen::VectorXd::Constant(6, -std::numeric_limits<double>::infinity());
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = Eigen::VectorXd::LinSpaced(50, -1.2, 1.2);
  const Eigen::MatrixXd p = predictive_samples(q, case1_net(), x, {}, 200, rng);
  const PredictionBand b = prediction_band(p);
  CHECK(b.sd.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.upper() == b.lower());
  CHECK((b.mean - mlp_eval(case1_net(), q.mu, x).col(0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mean relative L2") {
  Eigen::MatrixXd y(2, 2);
  y << 3, 4, 1, 0;
  Eigen::MatrixXd p(2, 2);
  p << 3, 4.5, 1, 0.1;
  CHECK(mean_relative_l2(p, y) == doctest::Approx((0.5 / 5.0 + 0.1) / 2.0));
  CHECK(mean_relative_l2(y, y) == 0.0);
}

TEST_CASE("report tables") {
  ReportInputs in;
  in.network = case1_net();
  in.posterior.mu = Eigen::VectorXd::Zero(6);
  in.posterior.rho = Eigen::VectorXd::Constant(6, -3.0);
  in.archives.emplace_back("HMC", normal_archive(6, 200, 50, 3));
  SinusoidSpec s;
  s.seed = 1;
  in.val = gen_sinusoid(s).second;
  in.settings.band_points = 11;
  in.settings.scatter_x = "layer0.weight[0,0]";
  in.settings.scatter_y = "layer1.weight[0,0]";
  in.settings.max_draws = 50;
  const auto files = build_report(in);
  REQUIRE(files.count("parameters.csv") == 1);
  const std::string& table = files.at("parameters.csv");
  CHECK(table.find("layer0.weight[0,0]") != std::string::npos);
  CHECK(table.find("HMC") != std::string::npos);
  bool band = false;
  for (const auto& [name, text] : files) band = band || name.find("band") != std::string::npos;
  CHECK(band);
  CHECK(build_report(in) == files);
}
