#pragma once

// Hamiltonian Monte Carlo with a diagonal mass matrix: leapfrog integration,
// Metropolis-Hastings correction, multi-chain orchestration and dual-averaging
// step-size adaptation.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vihmc/target.hpp"

namespace vihmc {

/// Position with its cached log density and gradient.
struct HmcState {
  Eigen::VectorXd position;
  double log_density = 0.0;
  Eigen::VectorXd grad;
};

HmcState make_state(const Target& target, Eigen::VectorXd position);

struct LeapfrogResult {
  HmcState end;
  Eigen::VectorXd momentum;
  bool divergent = false;  // non-finite state met mid-trajectory
};

/// Half momentum step, `steps` alternating full steps, closing half step.
/// The final momentum is returned un-negated. `inv_mass` is the diagonal of
/// M^{-1}; an empty vector means identity.
LeapfrogResult leapfrog(const Target& target, const HmcState& start, Eigen::VectorXd momentum,
                        double step_size, int steps, const Eigen::VectorXd& inv_mass = {});

/// Kinetic energy p^T M^{-1} p / 2.
double kinetic_energy(const Eigen::VectorXd& momentum, const Eigen::VectorXd& inv_mass);

/// Trajectory length either as a fixed leapfrog count or as an integration
/// time; in the latter case the count is max(1, round(length / step)).
struct Trajectory {
  int steps = 10;
  double length = 0.0;  // > 0 selects the integration-time form
  int max_steps = 100000;

  [[nodiscard]] int resolve(double step_size) const;
  bool operator==(const Trajectory&) const = default;
};

struct AdaptConfig {
  bool enabled = false;
  double target_acceptance = 0.8;
  int iterations = 500;
  int probe = 500;
  double tolerance = 0.07;
  int max_rounds = 4;

  bool operator==(const AdaptConfig&) const = default;
};

struct HmcConfig {
  double step_size = 1e-3;
  Trajectory trajectory;
  /// Diagonal of the inverse mass matrix; empty means identity.
  Eigen::VectorXd inv_mass;
  int chains = 1;
  int samples = 1000;
  int burn_in = 0;
  std::uint64_t seed = 0;
  AdaptConfig adapt;
  /// |H(proposal) - H(current)| above this rejects the proposal as divergent.
  double divergence_threshold = 1000.0;
  /// Worker threads for chains; 0 reads VIHMC_THREADS, else hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct MhResult {
  bool accepted = false;
  bool divergent = false;
  double hamiltonian_current = 0.0;
  double hamiltonian_proposal = 0.0;
  /// min(1, exp(-dH)); 0 for divergent trajectories.
  double accept_prob = 0.0;
};

/// One HMC transition: draw p ~ N(0, M), integrate, accept iff r > u. The
/// uniform is drawn for every proposal so the random stream does not depend
/// on the outcome.
MhResult mh_step(const Target& target, HmcState& state, std::mt19937_64& rng, double step_size,
                 int steps, const Eigen::VectorXd& inv_mass = {},
                 double divergence_threshold = 1000.0);

struct ChainRecord {
  std::uint64_t seed = 0;
  /// Kept draws (samples - burn_in) x D.
  Eigen::MatrixXd draws;
  /// One flag per proposal, burn-in included.
  std::vector<std::uint8_t> accepted;
  /// Hamiltonian at each proposal.
  std::vector<double> hamiltonian;
  /// Step size used by each proposal (constant unless adapted).
  std::vector<double> step_sizes;
  /// Dual-averaging warmup trace (empty when not adapting).
  std::vector<double> adapt_trace;
  double adapted_step_size = 0.0;
  double probe_acceptance = -1.0;
  int leapfrog_steps = 0;
  double seconds = 0.0;
  bool bad = false;
  std::string bad_reason;

  /// Fraction of post-burn-in proposals accepted.
  [[nodiscard]] double acceptance(int burn_in) const;
};

struct ChainArchive {
  static constexpr int kVersion = 1;

  int version = kVersion;
  std::vector<ChainRecord> chains;
  std::vector<Index> free_indices;
  std::vector<Index> frozen_indices;
  Eigen::VectorXd frozen_values;
  int samples = 0;
  int burn_in = 0;
  /// Serialized configuration the archive was produced from.
  std::string config_snapshot;

  [[nodiscard]] Index dim() const { return static_cast<Index>(free_indices.size()); }
  [[nodiscard]] Index kept_per_chain() const { return samples - burn_in; }
  [[nodiscard]] int good_chains() const;
  /// Kept draws of all good chains stacked.
  [[nodiscard]] Eigen::MatrixXd pooled_draws(bool good_only = true) const;
};

/// Per-chain generator seeded from (seed, chain) only.
std::mt19937_64 chain_rng(std::uint64_t seed, int chain);

/// Runs `config.chains` independent chains from `inits` (one per chain).
ChainArchive sample_chains(const Target& target, const HmcConfig& config,
                           const std::vector<Eigen::VectorXd>& inits);

struct AdaptResult {
  double step_size = 0.0;
  double probe_acceptance = 0.0;
  int rounds = 0;
  std::vector<double> trace;
  HmcState state;
};

/// Dual-averaging warmup followed by a probe of `config.adapt.probe`
/// proposals at the adapted step. Repeats (restarting from the adapted step)
/// while the probe acceptance is outside target +- tolerance, up to
/// max_rounds. Throws NumericalError if acceptance never leaves {0, 1}.
AdaptResult adapt_step_size(const Target& target, const HmcConfig& config, double target_acceptance,
                            HmcState state, std::mt19937_64& rng);

/// Heuristic leapfrog count max(1, round(pi * v / (2 * step))).
int leapfrog_step_count(double posterior_variance, double step_size);

/// Start points: `jitter` * N(0, 1) noise added to `center` for each chain.
std::vector<Eigen::VectorXd> jittered_inits(const Eigen::VectorXd& center, double jitter,
                                            int chains, std::uint64_t seed);
/// Start points drawn from N(0, prior_variance).
std::vector<Eigen::VectorXd> prior_inits(Index dim, double prior_variance, int chains,
                                         std::uint64_t seed);

}  // namespace vihmc
