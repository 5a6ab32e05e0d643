#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "examkit/irt_model.hpp"
#include "examkit/types.hpp"

namespace examkit {

struct SamplerConfig {
  enum class Algorithm { Nuts, RandomWalk };
  enum class Parameterization { NonCentered, Centered };

  int n_chains = 4;
  int n_warmup = 1000;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  double target_accept = 0.8;
  int max_leapfrog_steps = 1024;  // caps trajectory length per iteration
  Algorithm algorithm = Algorithm::Nuts;
  Parameterization parameterization = Parameterization::NonCentered;

  void validate() const;  // throws Error(InvalidArgument)
};

struct ChainStats {
  int divergences = 0;
  double divergence_rate = 0.0;
  double mean_accept = 0.0;
  double step_size = 0.0;
  int max_depth_hits = 0;
};

// Posterior draws on the constrained scale (alpha, beta, theta, mu, sigma).
// draws[chain] is row-major [iteration][parameter]; warmup is discarded.
struct PosteriorDraws {
  std::vector<std::string> parameter_names;
  std::vector<std::vector<double>> draws;
  std::vector<ChainStats> chain_stats;
  SamplerConfig config;
  std::vector<std::string> warnings;

  std::size_t n_chains() const { return draws.size(); }
  std::size_t n_parameters() const { return parameter_names.size(); }
  std::size_t n_iterations() const {
    return draws.empty() || parameter_names.empty()
               ? 0
               : draws.front().size() / parameter_names.size();
  }

  double value(std::size_t chain, std::size_t iteration, std::size_t param) const {
    return draws[chain][iteration * n_parameters() + param];
  }

  // Index of a named parameter, or -1.
  int parameter_index(const std::string& name) const;

  std::vector<double> chain_column(std::size_t chain, std::size_t param) const;
  // All chains concatenated in chain order.
  std::vector<double> pooled_column(std::size_t param) const;
};

// Runs n_chains independent adaptive chains over the model posterior and
// returns their post-warmup draws. Deterministic: identical (data, config)
// give bit-identical output, chains never interact, and per-chain RNG
// streams are counter-based so results do not depend on thread scheduling.
PosteriorDraws sample(const ResponseMatrix& data, const SamplerConfig& config);

// Same machinery over an arbitrary target (used by tests and tools).
PosteriorDraws sample_target(const PosteriorTarget& target, const SamplerConfig& config);

}  // namespace examkit
