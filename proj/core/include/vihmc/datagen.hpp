#pragma once

// Synthetic datasets: noisy two-sinusoid regression data, periodic Gaussian
// random fields, and viscous Burgers solutions for operator learning.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "vihmc/network.hpp"

namespace vihmc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Interval&) const = default;
};

/// y = a sin(w1 x + p1) + b sin(w2 x + p2) + noise.
struct SinusoidSpec {
  double a = 0.4;
  double b = 0.5;
  double omega1 = 4.0;
  double omega2 = -3.0;
  double phi1 = 0.0;
  double phi2 = 1.57;
  double noise_sigma = 1e-3;
  std::vector<Interval> train_ranges{{-1.0, -0.2}, {0.2, 1.0}};
  int n_train = 20;
  Interval val_range{-1.2, 1.2};
  int n_val = 300;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] double clean(double x) const;
  bool operator==(const SinusoidSpec&) const = default;
};

/// Noise-free curve values.
Eigen::VectorXd sinusoid_curve(const SinusoidSpec& spec, const Eigen::VectorXd& x);

/// x drawn uniformly over the (length-weighted) union of ranges.
std::pair<Dataset, Dataset> gen_sinusoid(const SinusoidSpec& spec);

struct BurgersSpec {
  double viscosity = 0.01;
  int nx = 64;
  int nt = 33;
  double grf_length_scale = 0.1;
  double grf_variance = 0.25;
  int grf_modes = 0;  // 0: nx / 2 - 1
  int n_fields = 200;
  double train_fraction = 0.5;
  double cfl = 0.4;
  long max_substeps = 2000000;
  std::uint64_t seed = 0;

  void validate() const;
  /// x_j = j / nx, j = 0..nx-1 (periodic, x = 1 is x = 0).
  [[nodiscard]] Eigen::VectorXd space_grid() const;
  /// t_k = k / (nt - 1), k = 0..nt-1.
  [[nodiscard]] Eigen::VectorXd time_grid() const;
  bool operator==(const BurgersSpec&) const = default;
};

/// One periodic field u(x) = sum_k c_k (a_k cos 2 pi k x + b_k sin 2 pi k x),
/// with c_k^2 proportional to exp(-(2 pi k l)^2 / 2) and sum_k c_k^2 equal to
/// the target pointwise variance.
struct GrfSample {
  Eigen::VectorXd cos_coeffs;
  Eigen::VectorXd sin_coeffs;

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] Eigen::VectorXd on_grid(const Eigen::VectorXd& x) const;
};

/// Spectral amplitudes c_k, k = 1..modes.
Eigen::VectorXd grf_amplitudes(const BurgersSpec& spec);
std::vector<GrfSample> gen_grf_samples(const BurgersSpec& spec, int count, std::uint64_t seed);
/// Fields sampled on the space grid, one row per field.
Eigen::MatrixXd gen_grf(const BurgersSpec& spec);

struct BurgersOptions {
  bool advection = true;
  /// Called with the discrete energy 0.5 * sum u^2 dx after every substep.
  std::function<void(double)> energy_probe;
};

/// Strang split step: exact Fourier diffusion half steps around an explicit
/// conservative upwind (MUSCL, minmod, Rusanov flux, SSP-RK2) advection step,
/// CFL-limited. Returns nx x nt; column k is the solution at time_grid()(k).
Eigen::MatrixXd solve_burgers(const Eigen::VectorXd& u0, const BurgersSpec& spec,
                              const BurgersOptions& options = {});

/// Branch inputs are u0 at the nx sensors; trunk queries are the (x, t) grid
/// (x fastest), padded with zeros to `trunk_dim` columns; targets are the
/// solution values. The train/val split is a seeded permutation of fields.
std::pair<Dataset, Dataset> build_operator_dataset(const Eigen::MatrixXd& fields,
                                                   const std::vector<Eigen::MatrixXd>& solutions,
                                                   const BurgersSpec& spec, int trunk_dim = 2);

/// Fields -> solutions -> split datasets.
std::pair<Dataset, Dataset> gen_burgers_dataset(const BurgersSpec& spec, int trunk_dim = 2);

}  // namespace vihmc
