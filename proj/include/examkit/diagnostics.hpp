#pragma once

#include <string>
#include <vector>

#include "examkit/sampler.hpp"

namespace examkit {

struct EssResult {
  double ess = 0.0;
  // Set when the parameter is constant across all draws; ess is then the
  // total draw count by convention and carries no mixing information.
  bool degenerate = false;
};

// Low-level forms operate on one scalar parameter given as per-chain series
// (all chains the same length, >= 2 chains, >= 4 draws each).
double split_rhat_chains(const std::vector<std::vector<double>>& chains);
EssResult ess_bulk_chains(const std::vector<std::vector<double>>& chains);
EssResult ess_tail_chains(const std::vector<std::vector<double>>& chains);

double split_rhat(const PosteriorDraws& draws, const std::string& parameter);
EssResult ess_bulk(const PosteriorDraws& draws, const std::string& parameter);
EssResult ess_tail(const PosteriorDraws& draws, const std::string& parameter);

struct ParameterDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double rhat = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
  bool degenerate = false;
};

struct DiagnosticsSummary {
  std::vector<ParameterDiagnostics> parameters;
  double max_rhat = 0.0;
  double min_ess_bulk = 0.0;
  double min_ess_tail = 0.0;
  int total_divergences = 0;
  std::vector<std::string> warnings;  // copied from the draws object
};

DiagnosticsSummary diagnose(const PosteriorDraws& draws);

// Normal quantile function (Wichura's AS 241, double precision).
double inverse_normal_cdf(double p);

// Type-7 sample quantile of unsorted values, p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace examkit
