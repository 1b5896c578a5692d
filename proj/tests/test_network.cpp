#include <doctest.h>

#include "support.hpp"
#include "vihmc/errors.hpp"
#include "vihmc/network.hpp"

using namespace vihmc;
using namespace vihmc::testing;

TEST_CASE("parameter counts") {
  CHECK(case1_net().param_count() == 6);
  CHECK(case2_net().param_count() == 141);
  CHECK(mlp(1, {{1, Activation::Identity, true}}).param_count() == 2);

  // Branch 101 -> 9 x 100, trunk 5 -> 9 x 100, one output bias.
  NetworkSpec burgers;
  burgers.kind = NetworkKind::DeepONet;
  burgers.branch.input_dim = 101;
  burgers.trunk.input_dim = 5;
  for (int k = 0; k < 9; ++k) {
    burgers.branch.layers.push_back({100, Activation::Tanh, true});
    burgers.trunk.layers.push_back({100, Activation::Tanh, true});
  }
  CHECK(burgers.param_count() == 172401);
  CHECK(param_count(burgers) == burgers.layout().total());
}

TEST_CASE("Case I network evaluation") {
  const NetworkSpec net = case1_net();
  Eigen::VectorXd theta(6);
  theta << 4.0, -3.0, 0.0, std::numbers::pi / 2, 0.4, 0.5;
  CHECK(mlp_eval(net, theta, Eigen::MatrixXd::Zero(1, 1))(0, 0) == doctest::Approx(0.5));

  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = uniform(10, 1, rng, -2.0, 2.0);
  const Eigen::MatrixXd y = mlp_eval(net, theta, x);
  for (Index i = 0; i < 10; ++i) {
    const double xi = x(i, 0);
    const double want = 0.4 * std::sin(4.0 * xi) + 0.5 * std::sin(-3.0 * xi + std::numbers::pi / 2);
    CHECK(y(i, 0) == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(mlp_eval(net, Eigen::VectorXd::Zero(6), x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single identity layer") {
  const NetworkSpec net = mlp(1, {{1, Activation::Identity, true}});
  const Eigen::Vector2d theta(2.0, 1.0);
  CHECK(mlp_eval(net, theta, Eigen::MatrixXd::Constant(1, 1, 3.0))(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("DeepONet with constant branch and trunk") {
  NetworkSpec net;
  net.kind = NetworkKind::DeepONet;
  net.branch.input_dim = 3;
  net.branch.layers = {{1, Activation::Identity, true}};
  net.trunk.input_dim = 3;
  net.trunk.layers = {{1, Activation::Identity, true}};
  net.output_bias = true;
  // branch: weights 0, bias 2; trunk: weights 0, bias 3; c = 0
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(net.param_count());
  theta(3) = 2.0;
  theta(7) = 3.0;
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd u = randn(4, 3, rng);
  const Eigen::MatrixXd y = randn(5, 3, rng);
  const Eigen::MatrixXd out = deeponet_eval(net, theta, u, y);
  CHECK(out.rows() == 4);
  CHECK(out.cols() == 5);
  CHECK((out.array() - 6.0).abs().maxCoeff() < 1e-15);
  // Symmetric nets: swapping the roles of u and y transposes the output.
  CHECK((deeponet_eval(net, theta, y, u) - out.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("DeepONet output is the latent dot product plus bias") {
  const NetworkSpec net = small_deeponet(4, 2, 5, 3);
  std::mt19937_64 rng(9);
  const Eigen::VectorXd theta = randn(net.param_count(), 1, rng);
  const Eigen::MatrixXd u = randn(3, 4, rng);
  const Eigen::MatrixXd y = randn(6, 2, rng);
  NetworkSpec branch = mlp(4, net.branch.layers);
  NetworkSpec trunk = mlp(2, net.trunk.layers);
  const Index nb = branch.param_count();
  const Index nt = trunk.param_count();
  const Eigen::MatrixXd b = mlp_eval(branch, theta.head(nb), u);
  const Eigen::MatrixXd t = mlp_eval(trunk, theta.segment(nb, nt), y);
  const Eigen::MatrixXd want = (b * t.transpose()).array() + theta(nb + nt);
  CHECK((deeponet_eval(net, theta, u, y) - want).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(net.latent_dim() == 3);
}

TEST_CASE("input shape errors name the offending size") {
  const NetworkSpec net = small_deeponet(4, 2, 5, 3);
  CHECK_THROWS_AS(check_inputs(net, Eigen::MatrixXd::Zero(2, 5), Eigen::MatrixXd::Zero(3, 2)),
                  ConfigError);
  CHECK_THROWS_AS(check_inputs(net, Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Zero(3, 3)),
                  ConfigError);
  CHECK_NOTHROW(check_inputs(net, Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Zero(3, 2)));
  CHECK_THROWS_AS(mlp_eval(case1_net(), Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Zero(1, 1)),
                  ConfigError);
}

TEST_CASE("layout names and block bookkeeping") {
  const ParamLayout layout = case1_net().layout();
  CHECK(layout.total() == 6);
  REQUIRE(layout.entries().size() == 3);
  CHECK(layout.entries()[0].rows == 2);
  CHECK(layout.entries()[0].cols == 1);
  CHECK(layout.entries()[1].role == "bias");
  CHECK(layout.entries()[2].rows == 1);
  CHECK(layout.entries()[2].cols == 2);
  CHECK(layout.name_of(4) == "layer1.weight[0,0]");
  CHECK(layout.name_of(2) == "layer0.bias[0]");
  CHECK_NOTHROW(layout.validate());

  std::mt19937_64 rng(2);
  const Eigen::VectorXd flat = randn(6, 1, rng);
  const auto blocks = layout.unflatten(flat);
  CHECK(blocks[2](0, 1) == flat(5));
  CHECK(layout.flatten(blocks) == flat);
}

TEST_CASE("spec hash distinguishes architectures") {
  CHECK(spec_hash(case1_net()) == spec_hash(case1_net()));
  CHECK(spec_hash(case1_net()) != spec_hash(case2_net()));
  NetworkSpec no_bias = case1_net();
  no_bias.mlp.layers[0].bias = false;
  CHECK(spec_hash(no_bias) != spec_hash(case1_net()));
}

TEST_CASE("initialization is seeded and bounded by fan-in") {
  const NetworkSpec net = case2_net();
  std::mt19937_64 a(5);
  std::mt19937_64 b(5);
  const Eigen::VectorXd ta = init_params(net, a, 1.0);
  CHECK(ta == init_params(net, b, 1.0));
  // Second layer has fan-in 10.
  const Index off = 20;
  CHECK(ta.segment(off, 110).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(10.0));
}

TEST_CASE("datasets validate and subset") {
  std::mt19937_64 rng(4);
  Dataset d = function_data(randn(5, 1, rng), randn(5, 1, rng));
  CHECK_NOTHROW(d.validate());
  const Dataset s = d.subset({4, 1});
  CHECK(s.count() == 2);
  CHECK(s.inputs(0, 0) == d.inputs(4, 0));
  d.targets = randn(4, 1, rng);
  CHECK_THROWS_AS(d.validate(), ConfigError);
}
