#include "vihmc/datagen.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "vihmc/errors.hpp"
#include "vihmc/hmc.hpp"

namespace vihmc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// -d/dx (u^2 / 2) with MUSCL-minmod reconstruction and a Rusanov flux.
void advection_rhs(const Eigen::VectorXd& u, double dx, Eigen::VectorXd& rhs,
                   Eigen::VectorXd& slope, Eigen::VectorXd& flux) {
  const Index n = u.size();
  auto at = [&](Index j) { return u((j + n) % n); };
  for (Index j = 0; j < n; ++j) {
    slope(j) = minmod(at(j) - at(j - 1), at(j + 1) - at(j));
  }
  for (Index j = 0; j < n; ++j) {
    const Index jp = (j + 1) % n;
    const double ul = u(j) + 0.5 * slope(j);
    const double ur = u(jp) - 0.5 * slope(jp);
    const double a = std::max(std::abs(ul), std::abs(ur));
    flux(j) = 0.25 * (ul * ul + ur * ur) - 0.5 * a * (ur - ul);  // F_{j+1/2}
  }
  for (Index j = 0; j < n; ++j) {
    rhs(j) = -(flux(j) - flux((j - 1 + n) % n)) / dx;
  }
}

class SpectralDiffusion {
 public:
  SpectralDiffusion(Index n, double viscosity) : n_(n), nu_(viscosity), wave_sq_(n) {
    for (Index m = 0; m < n; ++m) {
      const double k = kTwoPi * static_cast<double>(m <= n / 2 ? m : m - n);
      wave_sq_(m) = k * k;
    }
  }

  void apply(Eigen::VectorXd& u, double tau) {
    std::vector<double> in(u.data(), u.data() + n_);
    fft_.fwd(freq_, in);
    for (Index m = 0; m < n_; ++m) {
      freq_[static_cast<std::size_t>(m)] *= std::exp(-nu_ * wave_sq_(m) * tau);
    }
    fft_.inv(in, freq_);
    u = Eigen::Map<Eigen::VectorXd>(in.data(), n_);
  }

 private:
  Index n_;
  double nu_;
  Eigen::VectorXd wave_sq_;
  Eigen::FFT<double> fft_;
  std::vector<std::complex<double>> freq_;
};

}  // namespace

void SinusoidSpec::validate() const {
  if (noise_sigma < 0.0) throw ConfigError("sinusoid: noise sigma must be non-negative");
  if (n_train <= 0 || n_val <= 0) throw ConfigError("sinusoid: point counts must be positive");
  if (train_ranges.empty()) throw ConfigError("sinusoid: no training range");
  for (const auto& r : train_ranges) {
    if (!(r.hi > r.lo)) throw ConfigError("sinusoid: empty training range");
  }
  if (!(val_range.hi > val_range.lo)) throw ConfigError("sinusoid: empty validation range");
}

double SinusoidSpec::clean(double x) const {
  return a * std::sin(omega1 * x + phi1) + b * std::sin(omega2 * x + phi2);
}

Eigen::VectorXd sinusoid_curve(const SinusoidSpec& spec, const Eigen::VectorXd& x) {
  return x.unaryExpr([&](double v) { return spec.clean(v); });
}

std::pair<Dataset, Dataset> gen_sinusoid(const SinusoidSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  auto make = [&](const std::vector<Interval>& ranges, int n) {
    double total = 0.0;
    for (const auto& r : ranges) total += r.hi - r.lo;
    std::uniform_real_distribution<double> pick(0.0, total);
    Dataset d;
    d.kind = DatasetKind::Function;
    d.inputs.resize(n, 1);
    d.targets.resize(n, 1);
    for (int i = 0; i < n; ++i) {
      double s = pick(rng);
      double x = ranges.back().hi;
      for (const auto& r : ranges) {
        if (s <= r.hi - r.lo) {
          x = r.lo + s;
          break;
        }
        s -= r.hi - r.lo;
      }
      d.inputs(i, 0) = x;
    }
    for (int i = 0; i < n; ++i) {
      d.targets(i, 0) = spec.clean(d.inputs(i, 0)) + spec.noise_sigma * noise(rng);
    }
    d.noise_sigma = spec.noise_sigma;
    d.seed = spec.seed;
    d.source = "sinusoid";
    return d;
  };
  Dataset train = make(spec.train_ranges, spec.n_train);
  Dataset val = make({spec.val_range}, spec.n_val);
  return {std::move(train), std::move(val)};
}

void BurgersSpec::validate() const {
  if (!(viscosity > 0.0)) throw ConfigError("burgers: viscosity must be positive");
  if (nx < 8 || nt < 8) throw ConfigError("burgers: grid needs nx, nt >= 8");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("burgers: train fraction must lie in (0, 1)");
  }
  if (grf_variance < 0.0 || !(grf_length_scale > 0.0)) {
    throw ConfigError("burgers: GRF variance must be >= 0 and length scale > 0");
  }
  if (n_fields < 1) throw ConfigError("burgers: need at least one field");
  if (!(cfl > 0.0 && cfl <= 0.5)) throw ConfigError("burgers: cfl must lie in (0, 0.5]");
}

Eigen::VectorXd BurgersSpec::space_grid() const {
  return Eigen::VectorXd::LinSpaced(nx, 0.0, static_cast<double>(nx - 1)) / nx;
}

Eigen::VectorXd BurgersSpec::time_grid() const {
  return Eigen::VectorXd::LinSpaced(nt, 0.0, 1.0);
}

double GrfSample::operator()(double x) const {
  double u = 0.0;
  for (Index k = 0; k < cos_coeffs.size(); ++k) {
    const double arg = kTwoPi * static_cast<double>(k + 1) * x;
    u += cos_coeffs(k) * std::cos(arg) + sin_coeffs(k) * std::sin(arg);
  }
  return u;
}

Eigen::VectorXd GrfSample::on_grid(const Eigen::VectorXd& x) const {
  return x.unaryExpr([this](double v) { return (*this)(v); });
}

Eigen::VectorXd grf_amplitudes(const BurgersSpec& spec) {
  const int modes = spec.grf_modes > 0 ? spec.grf_modes : spec.nx / 2 - 1;
  Eigen::VectorXd w(modes);
  for (int k = 1; k <= modes; ++k) {
    const double z = kTwoPi * k * spec.grf_length_scale;
    w(k - 1) = std::exp(-0.5 * z * z);
  }
  const double total = w.sum();
  if (!(total > 0.0)) {
    return Eigen::VectorXd::Zero(modes);
  }
  return (spec.grf_variance * w / total).cwiseSqrt();
}

std::vector<GrfSample> gen_grf_samples(const BurgersSpec& spec, int count, std::uint64_t seed) {
  const Eigen::VectorXd amp = grf_amplitudes(spec);
  std::vector<GrfSample> out;
  out.reserve(static_cast<std::size_t>(count));
  std::normal_distribution<double> normal;
  for (int f = 0; f < count; ++f) {
    std::mt19937_64 rng = chain_rng(seed, f);
    GrfSample s;
    s.cos_coeffs.resize(amp.size());
    s.sin_coeffs.resize(amp.size());
    for (Index k = 0; k < amp.size(); ++k) {
      s.cos_coeffs(k) = amp(k) * normal(rng);
      s.sin_coeffs(k) = amp(k) * normal(rng);
    }
    out.push_back(std::move(s));
  }
  return out;
}

Eigen::MatrixXd gen_grf(const BurgersSpec& spec) {
  spec.validate();
  const Eigen::VectorXd x = spec.space_grid();
  const auto samples = gen_grf_samples(spec, spec.n_fields, spec.seed);
  Eigen::MatrixXd fields(spec.n_fields, spec.nx);
  for (int f = 0; f < spec.n_fields; ++f) {
    fields.row(f) = samples[static_cast<std::size_t>(f)].on_grid(x).transpose();
  }
  return fields;
}

Eigen::MatrixXd solve_burgers(const Eigen::VectorXd& u0, const BurgersSpec& spec,
                              const BurgersOptions& options) {
  spec.validate();
  if (u0.size() != spec.nx) {
    throw ConfigError("solve_burgers: initial condition has " + std::to_string(u0.size()) +
                      " points, grid has " + std::to_string(spec.nx));
  }
  const Index n = spec.nx;
  const double dx = 1.0 / static_cast<double>(n);
  const double interval = 1.0 / static_cast<double>(spec.nt - 1);

  SpectralDiffusion diffusion(n, spec.viscosity);
  Eigen::MatrixXd out(n, spec.nt);
  Eigen::VectorXd u = u0;
  out.col(0) = u;
  Eigen::VectorXd rhs(n), slope(n), flux(n), stage(n);

  for (int k = 1; k < spec.nt; ++k) {
    long substeps = 1;
    if (options.advection) {
      const double speed = u.cwiseAbs().maxCoeff();
      substeps = std::max(1L, static_cast<long>(std::ceil(interval * speed / (spec.cfl * dx))));
      if (substeps > spec.max_substeps || !std::isfinite(speed)) {
        throw NumericalError("solve_burgers: CFL limit needs " + std::to_string(substeps) +
                             " substeps for max |u| = " + std::to_string(speed) +
                             " (limit " + std::to_string(spec.max_substeps) + ")");
      }
    }
    const double dt = interval / static_cast<double>(substeps);
    for (long s = 0; s < substeps; ++s) {
      diffusion.apply(u, 0.5 * dt);
      if (options.advection) {
        advection_rhs(u, dx, rhs, slope, flux);
        stage = u + dt * rhs;
        advection_rhs(stage, dx, rhs, slope, flux);
        u = 0.5 * (u + stage + dt * rhs);
      }
      diffusion.apply(u, 0.5 * dt);
      if (options.energy_probe) {
        options.energy_probe(0.5 * u.squaredNorm() * dx);
      }
    }
    if (!u.allFinite()) {
      throw NumericalError("solve_burgers: non-finite solution at output " + std::to_string(k));
    }
    out.col(k) = u;
  }
  return out;
}

std::pair<Dataset, Dataset> build_operator_dataset(const Eigen::MatrixXd& fields,
                                                   const std::vector<Eigen::MatrixXd>& solutions,
                                                   const BurgersSpec& spec, int trunk_dim) {
  if (static_cast<std::size_t>(fields.rows()) != solutions.size()) {
    throw ConfigError("build_operator_dataset: " + std::to_string(fields.rows()) + " fields but " +
                      std::to_string(solutions.size()) + " solutions");
  }
  if (trunk_dim < 2) {
    throw ConfigError("build_operator_dataset: trunk input needs at least (x, t)");
  }
  const Eigen::VectorXd x = spec.space_grid();
  const Eigen::VectorXd t = spec.time_grid();
  const Index q = static_cast<Index>(spec.nx) * spec.nt;
  Eigen::MatrixXd queries = Eigen::MatrixXd::Zero(q, trunk_dim);
  for (int k = 0; k < spec.nt; ++k) {
    for (int j = 0; j < spec.nx; ++j) {
      queries(k * spec.nx + j, 0) = x(j);
      queries(k * spec.nx + j, 1) = t(k);
    }
  }

  const Index f = fields.rows();
  std::vector<Index> order(static_cast<std::size_t>(f));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(spec.seed ^ 0x5eedULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<Index>(std::floor(spec.train_fraction * static_cast<double>(f)));

  auto make = [&](Index begin, Index end) {
    Dataset d;
    d.kind = DatasetKind::Operator;
    d.queries = queries;
    d.inputs.resize(end - begin, fields.cols());
    d.targets.resize(end - begin, q);
    for (Index r = begin; r < end; ++r) {
      const Index src = order[static_cast<std::size_t>(r)];
      d.inputs.row(r - begin) = fields.row(src);
      const Eigen::MatrixXd& sol = solutions[static_cast<std::size_t>(src)];
      for (int k = 0; k < spec.nt; ++k) {
        d.targets.block(r - begin, static_cast<Index>(k) * spec.nx, 1, spec.nx) =
            sol.col(k).transpose();
      }
    }
    d.seed = spec.seed;
    d.source = "burgers: spectral squared-exponential GRF stand-in initial conditions";
    return d;
  };
  return {make(0, n_train), make(n_train, f)};
}

std::pair<Dataset, Dataset> gen_burgers_dataset(const BurgersSpec& spec, int trunk_dim) {
  const Eigen::MatrixXd fields = gen_grf(spec);
  std::vector<Eigen::MatrixXd> solutions;
  solutions.reserve(static_cast<std::size_t>(fields.rows()));
  for (Index f = 0; f < fields.rows(); ++f) {
    solutions.push_back(solve_burgers(fields.row(f).transpose(), spec));
  }
  return build_operator_dataset(fields, solutions, spec, trunk_dim);
}

}  // namespace vihmc
