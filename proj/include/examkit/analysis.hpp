#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "examkit/sampler.hpp"
#include "examkit/types.hpp"

namespace examkit {

// Fisher information of one item at ability theta: alpha^2 P (1 - P).
double item_information(double alpha, double beta, double theta);

// Conditional reliability at a given test information level: I / (1 + I).
double conditional_reliability(double information);

enum class DiscriminationBin { BelowScale, Low, Moderate, High, VeryHigh };
std::string to_string(DiscriminationBin bin);

// Baker-style bands over posterior mean discrimination:
// (0, 0.35] below scale, (0.35, 0.64] low, (0.64, 1.34] moderate,
// (1.34, 1.7] high, above 1.7 very high.
DiscriminationBin bin_discrimination(double alpha);

struct ThetaGrid {
  double lo = -4.0;
  double hi = 4.0;
  double step = 0.05;
  std::vector<double> points() const;  // inclusive of both ends
};

struct ItemCurveParams {
  double alpha = 1.0;
  double beta = 0.0;
};

struct InformationCurve {
  std::string label;
  std::vector<double> grid;
  std::vector<double> information;  // test information per grid point
  std::vector<double> reliability;  // conditional reliability per grid point
  double peak_theta = 0.0;
  double peak_information = 0.0;
};

// Test information over a grid. Per-point values are accumulated in 2^-30
// fixed-point quanta, so splitting an item set into disjoint parts and
// adding the parts' curves reproduces the whole curve bit for bit (exact
// while total information stays below 2^23). The reported peak refines the
// grid argmax on the smooth curve, so an off-grid maximum is still found.
InformationCurve test_information(const std::vector<ItemCurveParams>& items,
                                  const ThetaGrid& grid = {},
                                  const std::string& label = "");

struct ItemSummary {
  std::string item_id;
  ExamKind exam_kind = ExamKind::PreTest;
  double alpha_mean = 0.0, alpha_lo = 0.0, alpha_hi = 0.0;
  double beta_mean = 0.0, beta_lo = 0.0, beta_hi = 0.0;
  DiscriminationBin bin = DiscriminationBin::Moderate;
};

// Posterior means and equal-tailed credible intervals per item, in matrix
// item order. ci_level is the central mass, e.g. 0.95.
std::vector<ItemSummary> summarize_items(const PosteriorDraws& draws,
                                         const ResponseMatrix& matrix,
                                         double ci_level = 0.95);

enum class ContrastQuantity { MeanAlpha, MeanBeta };
std::string to_string(ContrastQuantity q);

struct GroupContrast {
  ContrastQuantity quantity = ContrastQuantity::MeanBeta;
  ExamKind group_a = ExamKind::AiGenerated;
  ExamKind group_b = ExamKind::Standardized;
  double delta_mean = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double prob_positive = 0.0;  // P(delta >= 0)
  double prob_negative = 0.0;  // P(delta < 0)
  std::vector<double> delta_draws;
};

// Per-draw difference of group-mean item parameters, group_a minus
// group_b, with an equal-tailed interval over the draws.
GroupContrast group_contrast(const PosteriorDraws& draws,
                             const ResponseMatrix& matrix,
                             ContrastQuantity quantity, ExamKind group_a,
                             ExamKind group_b, double ci_level = 0.95);

struct PpcResult {
  ExamKind group = ExamKind::PreTest;
  double observed_proportion = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  bool observed_inside = false;
  std::vector<double> replicate_proportions;  // one per posterior draw used
};

// Posterior predictive check of the proportion-correct statistic within
// one exam kind. Each retained draw replays the observed cells once.
// max_draws > 0 thins to at most that many draws, evenly spaced.
PpcResult posterior_predictive_proportion(const PosteriorDraws& draws,
                                          const ResponseMatrix& matrix,
                                          ExamKind group, std::uint64_t seed,
                                          double ci_level = 0.95,
                                          int max_draws = 0);

// Plug-in curve for one class's semester-end items from posterior mean
// parameters; full_posterior averages the curve over draws instead.
InformationCurve class_information_curve(const PosteriorDraws& draws,
                                         const ResponseMatrix& matrix,
                                         const std::string& class_id,
                                         const ThetaGrid& grid = {},
                                         bool full_posterior = false);

}  // namespace examkit
