#include "vihmc/hmc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <thread>

#include "vihmc/dual_averaging.hpp"
#include "vihmc/errors.hpp"

namespace vihmc {

namespace {

constexpr std::uint64_t kInitStream = 0x9e3779b97f4a7c15ULL;

Eigen::VectorXd draw_momentum(Index d, const Eigen::VectorXd& inv_mass, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd p(d);
  for (Index i = 0; i < d; ++i) {
    p(i) = normal(rng);
  }
  if (inv_mass.size() > 0) {
    p = p.cwiseQuotient(inv_mass.cwiseSqrt());
  }
  return p;
}

int worker_count(int requested, int chains) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("VIHMC_THREADS"); env != nullptr) {
      n = std::atoi(env);
    }
  }
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
  }
  return std::clamp(n, 1, std::max(chains, 1));
}

}  // namespace

HmcState make_state(const Target& target, Eigen::VectorXd position) {
  HmcState s;
  s.position = std::move(position);
  s.log_density = target.log_density_grad(s.position, s.grad);
  return s;
}

double kinetic_energy(const Eigen::VectorXd& momentum, const Eigen::VectorXd& inv_mass) {
  if (inv_mass.size() == 0) {
    return 0.5 * momentum.squaredNorm();
  }
  return 0.5 * momentum.cwiseAbs2().dot(inv_mass);
}

LeapfrogResult leapfrog(const Target& target, const HmcState& start, Eigen::VectorXd momentum,
                        double step_size, int steps, const Eigen::VectorXd& inv_mass) {
  if (momentum.size() != start.position.size()) {
    throw ConfigError("leapfrog: momentum and position lengths differ");
  }
  if (inv_mass.size() != 0 && inv_mass.size() != momentum.size()) {
    throw ConfigError("leapfrog: mass matrix diagonal has the wrong length");
  }
  LeapfrogResult r;
  r.end = start;
  r.momentum = std::move(momentum);
  if (steps <= 0) {
    return r;
  }
  Eigen::VectorXd& x = r.end.position;
  Eigen::VectorXd& p = r.momentum;
  Eigen::VectorXd& g = r.end.grad;

  p += 0.5 * step_size * g;
  for (int l = 1; l <= steps; ++l) {
    if (inv_mass.size() == 0) {
      x += step_size * p;
    } else {
      x += step_size * p.cwiseProduct(inv_mass);
    }
    r.end.log_density = target.log_density_grad(x, g);
    if (!std::isfinite(r.end.log_density) || !g.allFinite()) {
      r.divergent = true;
      return r;
    }
    if (l < steps) {
      p += step_size * g;
    }
  }
  p += 0.5 * step_size * g;
  if (!p.allFinite() || !x.allFinite()) {
    r.divergent = true;
  }
  return r;
}

int Trajectory::resolve(double step_size) const {
  if (length > 0.0) {
    const double n = std::round(length / step_size);
    return static_cast<int>(std::clamp(n, 1.0, static_cast<double>(max_steps)));
  }
  return std::min(steps, max_steps);
}

void HmcConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("hmc: step size must be positive");
  if (trajectory.length <= 0.0 && trajectory.steps < 1) {
    throw ConfigError("hmc: leapfrog steps must be at least 1");
  }
  if (trajectory.max_steps < 1) throw ConfigError("hmc: max leapfrog steps must be at least 1");
  for (Index i = 0; i < inv_mass.size(); ++i) {
    if (!(inv_mass(i) > 0.0)) throw ConfigError("hmc: mass matrix entries must be positive");
  }
  if (chains < 1) throw ConfigError("hmc: need at least one chain");
  if (samples < 1) throw ConfigError("hmc: samples per chain must be at least 1");
  if (burn_in < 0 || burn_in >= samples) {
    throw ConfigError("hmc: burn-in must lie in [0, samples)");
  }
  if (adapt.enabled) {
    if (!(adapt.target_acceptance > 0.0 && adapt.target_acceptance < 1.0)) {
      throw ConfigError("hmc: target acceptance must lie in (0, 1)");
    }
    if (adapt.iterations < 1 || adapt.probe < 1 || adapt.max_rounds < 1) {
      throw ConfigError("hmc: adaptation iterations, probe and rounds must be positive");
    }
  }
}

MhResult mh_step(const Target& target, HmcState& state, std::mt19937_64& rng, double step_size,
                 int steps, const Eigen::VectorXd& inv_mass, double divergence_threshold) {
  MhResult res;
  const Eigen::VectorXd p0 = draw_momentum(state.position.size(), inv_mass, rng);
  const double k0 = kinetic_energy(p0, inv_mass);
  res.hamiltonian_current = -state.log_density + k0;

  LeapfrogResult lf = leapfrog(target, state, p0, step_size, steps, inv_mass);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  double delta = std::numeric_limits<double>::infinity();
  if (!lf.divergent) {
    const double k1 = kinetic_energy(lf.momentum, inv_mass);
    delta = (state.log_density - lf.end.log_density) + (k1 - k0);
    res.hamiltonian_proposal = -lf.end.log_density + k1;
  } else {
    res.hamiltonian_proposal = std::numeric_limits<double>::infinity();
  }
  res.divergent = lf.divergent || !std::isfinite(delta) || std::abs(delta) > divergence_threshold;
  if (res.divergent) {
    res.accept_prob = 0.0;
    return res;
  }
  res.accept_prob = delta <= 0.0 ? 1.0 : std::exp(-delta);
  if (std::log(u) < -delta) {
    res.accepted = true;
    state = std::move(lf.end);
  }
  return res;
}

double ChainRecord::acceptance(int burn_in) const {
  const auto begin = accepted.begin() + std::min<std::ptrdiff_t>(burn_in, accepted.size());
  const auto n = std::distance(begin, accepted.end());
  if (n == 0) {
    return 0.0;
  }
  return static_cast<double>(std::count(begin, accepted.end(), std::uint8_t{1})) /
         static_cast<double>(n);
}

int ChainArchive::good_chains() const {
  return static_cast<int>(
      std::count_if(chains.begin(), chains.end(), [](const ChainRecord& c) { return !c.bad; }));
}

Eigen::MatrixXd ChainArchive::pooled_draws(bool good_only) const {
  Index rows = 0;
  for (const auto& c : chains) {
    if (!good_only || !c.bad) rows += c.draws.rows();
  }
  Eigen::MatrixXd out(rows, dim());
  Index r = 0;
  for (const auto& c : chains) {
    if (good_only && c.bad) continue;
    out.middleRows(r, c.draws.rows()) = c.draws;
    r += c.draws.rows();
  }
  return out;
}

std::mt19937_64 chain_rng(std::uint64_t seed, int chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(chain)};
  return std::mt19937_64(seq);
}

namespace {

// Doubles or halves the step until the one-step acceptance ratio crosses 1/2.
double reasonable_step(const Target& target, const HmcState& state, double step,
                       const Eigen::VectorXd& inv_mass, std::mt19937_64& rng) {
  auto log_ratio = [&](double eps) {
    const Eigen::VectorXd p = draw_momentum(state.position.size(), inv_mass, rng);
    const LeapfrogResult lf = leapfrog(target, state, p, eps, 1, inv_mass);
    if (lf.divergent) {
      return -std::numeric_limits<double>::infinity();
    }
    const double h0 = -state.log_density + kinetic_energy(p, inv_mass);
    const double h1 = -lf.end.log_density + kinetic_energy(lf.momentum, inv_mass);
    return std::isfinite(h1) ? h0 - h1 : -std::numeric_limits<double>::infinity();
  };
  const double log_half = std::log(0.5);
  const double first = log_ratio(step);
  const double dir = first > log_half ? 1.0 : -1.0;
  for (int i = 0; i < 60; ++i) {
    const double lr = log_ratio(step);
    if (dir > 0 ? !(lr > log_half) : (lr > log_half)) {
      break;
    }
    step *= dir > 0 ? 2.0 : 0.5;
  }
  return step;
}

}  // namespace

AdaptResult adapt_step_size(const Target& target, const HmcConfig& config, double target_acceptance,
                            HmcState state, std::mt19937_64& rng) {
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw ConfigError("adapt_step_size: target acceptance must lie in (0, 1)");
  }
  if (!std::isfinite(state.log_density)) {
    throw NumericalError("adapt_step_size: initial state has non-finite log density");
  }
  const auto& ac = config.adapt;
  AdaptResult out;
  double step = reasonable_step(target, state, config.step_size, config.inv_mass, rng);
  bool bracketed = false;
  double best_gap = std::numeric_limits<double>::infinity();

  for (int round = 1; round <= ac.max_rounds; ++round) {
    DualAveraging da(step, {target_acceptance});
    for (int i = 0; i < ac.iterations; ++i) {
      const double eps = da.step();
      const MhResult r = mh_step(target, state, rng, eps, config.trajectory.resolve(eps),
                                 config.inv_mass, config.divergence_threshold);
      da.update(r.accept_prob);
      out.trace.push_back(eps);
    }
    step = da.final_step();
    const int steps = config.trajectory.resolve(step);
    int accepted = 0;
    for (int k = 0; k < ac.probe; ++k) {
      const MhResult r = mh_step(target, state, rng, step, steps, config.inv_mass,
                                 config.divergence_threshold);
      accepted += r.accepted ? 1 : 0;
    }
    const double acc = static_cast<double>(accepted) / static_cast<double>(ac.probe);
    bracketed = bracketed || (accepted > 0 && accepted < ac.probe);
    out.rounds = round;
    const double gap = std::abs(acc - target_acceptance);
    if (gap < best_gap) {
      best_gap = gap;
      out.step_size = step;
      out.probe_acceptance = acc;
    }
    if (gap <= ac.tolerance) {
      break;
    }
  }
  if (!bracketed) {
    throw NumericalError("step-size adaptation failed to bracket the target acceptance: probe "
                         "acceptance stuck at " +
                         std::to_string(out.probe_acceptance) + " with step " +
                         std::to_string(out.step_size));
  }
  out.state = std::move(state);
  return out;
}

ChainArchive sample_chains(const Target& target, const HmcConfig& config,
                           const std::vector<Eigen::VectorXd>& inits) {
  config.validate();
  if (static_cast<int>(inits.size()) != config.chains) {
    throw ConfigError("sample_chains: " + std::to_string(inits.size()) + " initial points for " +
                      std::to_string(config.chains) + " chains");
  }
  const Index d = target.dim();
  for (const auto& x : inits) {
    if (x.size() != d) {
      throw ConfigError("sample_chains: initial point has " + std::to_string(x.size()) +
                        " entries, target has " + std::to_string(d));
    }
  }

  ChainArchive archive;
  archive.samples = config.samples;
  archive.burn_in = config.burn_in;
  archive.free_indices.resize(static_cast<std::size_t>(d));
  std::iota(archive.free_indices.begin(), archive.free_indices.end(), Index{0});
  archive.chains.resize(static_cast<std::size_t>(config.chains));
  std::vector<std::string> errors(static_cast<std::size_t>(config.chains));

  auto run_chain = [&](int c) {
    ChainRecord& rec = archive.chains[static_cast<std::size_t>(c)];
    const auto t0 = std::chrono::steady_clock::now();
    rec.seed = config.seed;
    std::mt19937_64 rng = chain_rng(config.seed, c);
    HmcState state = make_state(target, inits[static_cast<std::size_t>(c)]);
    if (!std::isfinite(state.log_density) || !state.grad.allFinite()) {
      throw NumericalError("chain " + std::to_string(c) +
                           ": initial point has non-finite log density or gradient");
    }
    double step = config.step_size;
    if (config.adapt.enabled) {
      AdaptResult ad =
          adapt_step_size(target, config, config.adapt.target_acceptance, std::move(state), rng);
      step = ad.step_size;
      state = std::move(ad.state);
      rec.adapt_trace = std::move(ad.trace);
      rec.probe_acceptance = ad.probe_acceptance;
    }
    rec.adapted_step_size = step;
    const int steps = config.trajectory.resolve(step);
    rec.leapfrog_steps = steps;

    const int kept = config.samples - config.burn_in;
    rec.draws.resize(kept, d);
    rec.accepted.reserve(static_cast<std::size_t>(config.samples));
    rec.hamiltonian.reserve(static_cast<std::size_t>(config.samples));
    rec.step_sizes.reserve(static_cast<std::size_t>(config.samples));
    for (int s = 0; s < config.samples; ++s) {
      const MhResult r = mh_step(target, state, rng, step, steps, config.inv_mass,
                                 config.divergence_threshold);
      rec.accepted.push_back(r.accepted ? 1 : 0);
      rec.hamiltonian.push_back(r.hamiltonian_proposal);
      rec.step_sizes.push_back(step);
      if (s >= config.burn_in) {
        rec.draws.row(s - config.burn_in) = state.position.transpose();
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double acc = rec.acceptance(config.burn_in);
    if (acc < 0.01) {
      rec.bad = true;
      rec.bad_reason = "acceptance " + std::to_string(acc) + " after burn-in";
    } else if (!rec.draws.allFinite()) {
      rec.bad = true;
      rec.bad_reason = "non-finite draw";
    }
  };

  const int workers = worker_count(config.threads, config.chains);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next++; c < config.chains; c = next++) {
      try {
        run_chain(c);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(c)] = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError(e);
  }
  return archive;
}

int leapfrog_step_count(double posterior_variance, double step_size) {
  if (!(step_size > 0.0)) {
    throw ConfigError("leapfrog_step_count: step size must be positive");
  }
  const double n = std::round(std::numbers::pi * posterior_variance / (2.0 * step_size));
  return static_cast<int>(std::max(1.0, n));
}

std::vector<Eigen::VectorXd> jittered_inits(const Eigen::VectorXd& center, double jitter,
                                            int chains, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  std::normal_distribution<double> normal;
  for (int c = 0; c < chains; ++c) {
    std::mt19937_64 rng = chain_rng(seed ^ kInitStream, c);
    Eigen::VectorXd x = center;
    for (Index i = 0; i < x.size(); ++i) {
      x(i) += jitter * normal(rng);
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Eigen::VectorXd> prior_inits(Index dim, double prior_variance, int chains,
                                         std::uint64_t seed) {
  return jittered_inits(Eigen::VectorXd::Zero(dim), std::sqrt(prior_variance), chains, seed);
}

}  // namespace vihmc
