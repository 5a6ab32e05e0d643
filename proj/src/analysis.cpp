#include "examkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "examkit/diagnostics.hpp"
#include "examkit/errors.hpp"
#include "examkit/irt_model.hpp"
#include "examkit/rng.hpp"

namespace examkit {
namespace {

constexpr double kQuantum = 1073741824.0;  // 2^30

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / x.size();
}

// Smooth (unquantized) test information at one ability value.
double smooth_information(const std::vector<ItemCurveParams>& items, double t) {
  double s = 0.0;
  for (const auto& it : items) s += item_information(it.alpha, it.beta, t);
  return s;
}

// d/dt of smooth_information. Near a peak the information itself is flat
// to double precision over a ~1e-8 wide plateau, so locating the peak by
// value comparisons stalls there; the derivative stays well conditioned
// through the root and supports bisection to full precision.
double smooth_information_slope(const std::vector<ItemCurveParams>& items,
                                double t) {
  double d = 0.0;
  for (const auto& it : items) {
    double p = response_probability(t, it.alpha, it.beta);
    d += it.alpha * it.alpha * it.alpha * p * (1.0 - p) * (1.0 - 2.0 * p);
  }
  return d;
}

struct ParamColumns {
  std::vector<int> alpha;  // per item index
  std::vector<int> beta;
  std::vector<int> theta;  // per student index
};

ParamColumns locate_columns(const PosteriorDraws& draws,
                            const ResponseMatrix& matrix) {
  ParamColumns cols;
  cols.alpha.resize(matrix.n_items());
  cols.beta.resize(matrix.n_items());
  cols.theta.resize(matrix.n_students());
  for (std::size_t j = 0; j < matrix.n_items(); ++j) {
    std::string tag = "[" + std::to_string(j + 1) + "]";
    cols.alpha[j] = draws.parameter_index("alpha" + tag);
    cols.beta[j] = draws.parameter_index("beta" + tag);
    require(cols.alpha[j] >= 0 && cols.beta[j] >= 0, ErrorCode::InvalidArgument,
            "draws lack item parameters for index " + std::to_string(j + 1));
  }
  for (std::size_t i = 0; i < matrix.n_students(); ++i) {
    cols.theta[i] =
        draws.parameter_index("theta[" + std::to_string(i + 1) + "]");
    require(cols.theta[i] >= 0, ErrorCode::InvalidArgument,
            "draws lack ability parameters for index " + std::to_string(i + 1));
  }
  return cols;
}

void check_ci_level(double ci_level) {
  require(ci_level > 0.0 && ci_level < 1.0, ErrorCode::InvalidArgument,
          "ci_level must lie in (0, 1)");
}

}  // namespace

double item_information(double alpha, double beta, double theta) {
  require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::InvalidArgument,
          "alpha must be positive and finite");
  require(std::isfinite(beta) && std::isfinite(theta),
          ErrorCode::InvalidArgument, "beta and theta must be finite");
  double p = response_probability(theta, alpha, beta);
  return alpha * alpha * p * (1.0 - p);
}

double conditional_reliability(double information) {
  require(std::isfinite(information) && information >= 0.0,
          ErrorCode::InvalidArgument, "information must be non-negative");
  return information / (1.0 + information);
}

std::string to_string(DiscriminationBin bin) {
  switch (bin) {
    case DiscriminationBin::BelowScale: return "below_scale";
    case DiscriminationBin::Low: return "low";
    case DiscriminationBin::Moderate: return "moderate";
    case DiscriminationBin::High: return "high";
    case DiscriminationBin::VeryHigh: return "very_high";
  }
  return "unknown";
}

DiscriminationBin bin_discrimination(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::InvalidArgument,
          "alpha must be positive and finite");
  if (alpha <= 0.35) return DiscriminationBin::BelowScale;
  if (alpha <= 0.64) return DiscriminationBin::Low;
  if (alpha <= 1.34) return DiscriminationBin::Moderate;
  if (alpha <= 1.7) return DiscriminationBin::High;
  return DiscriminationBin::VeryHigh;
}

std::vector<double> ThetaGrid::points() const {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
          ErrorCode::InvalidArgument, "grid bounds must be finite with lo < hi");
  require(step > 0.0 && std::isfinite(step), ErrorCode::InvalidArgument,
          "grid step must be positive");
  std::vector<double> pts;
  long n = std::lround((hi - lo) / step);
  require(n >= 1 && n <= 1000000, ErrorCode::InvalidArgument,
          "grid resolves to an unusable point count");
  pts.reserve(n + 1);
  for (long k = 0; k <= n; ++k) pts.push_back(lo + k * step);
  pts.back() = hi;
  return pts;
}

InformationCurve test_information(const std::vector<ItemCurveParams>& items,
                                  const ThetaGrid& grid,
                                  const std::string& label) {
  require(!items.empty(), ErrorCode::InvalidArgument,
          "information curve needs at least one item");
  for (const auto& it : items) {
    require(std::isfinite(it.alpha) && it.alpha > 0.0,
            ErrorCode::InvalidArgument, "alpha must be positive and finite");
    require(std::isfinite(it.beta), ErrorCode::InvalidArgument,
            "beta must be finite");
  }
  InformationCurve curve;
  curve.label = label;
  curve.grid = grid.points();
  curve.information.resize(curve.grid.size());
  curve.reliability.resize(curve.grid.size());

  std::size_t argmax = 0;
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    std::int64_t q = 0;
    for (const auto& it : items)
      q += std::llround(item_information(it.alpha, it.beta, curve.grid[k]) *
                        kQuantum);
    curve.information[k] = static_cast<double>(q) / kQuantum;
    curve.reliability[k] = conditional_reliability(curve.information[k]);
    if (curve.information[k] > curve.information[argmax]) argmax = k;
  }

  // Refine the discrete argmax on the smooth curve, one grid step to each
  // side, by bisecting the slope's sign change. An argmax at a domain edge
  // whose bracket has no sign change stays at the grid point.
  double lo = curve.grid[argmax == 0 ? 0 : argmax - 1];
  double hi = curve.grid[std::min(argmax + 1, curve.grid.size() - 1)];
  double best_t = curve.grid[argmax];
  double best_v = smooth_information(items, best_t);
  if (smooth_information_slope(items, lo) >= 0.0 &&
      smooth_information_slope(items, hi) <= 0.0) {
    double a = lo, b = hi;
    for (int it = 0; it < 100; ++it) {
      double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      if (smooth_information_slope(items, m) >= 0.0)
        a = m;
      else
        b = m;
    }
    double mid = 0.5 * (a + b);
    double fm = smooth_information(items, mid);
    // ties keep the grid point: when the float-flat plateau around the
    // peak covers it, the grid point is already the argmax
    if (fm > best_v) {
      best_t = mid;
      best_v = fm;
    }
  }
  curve.peak_theta = best_t;
  curve.peak_information = best_v;
  return curve;
}

std::vector<ItemSummary> summarize_items(const PosteriorDraws& draws,
                                         const ResponseMatrix& matrix,
                                         double ci_level) {
  check_ci_level(ci_level);
  auto cols = locate_columns(draws, matrix);
  double tail = (1.0 - ci_level) / 2.0;
  std::vector<ItemSummary> out;
  out.reserve(matrix.n_items());
  for (std::size_t j = 0; j < matrix.n_items(); ++j) {
    ItemSummary s;
    s.item_id = matrix.item_ids[j];
    s.exam_kind = matrix.item_kind[j];
    auto a = draws.pooled_column(static_cast<std::size_t>(cols.alpha[j]));
    auto b = draws.pooled_column(static_cast<std::size_t>(cols.beta[j]));
    s.alpha_mean = mean_of(a);
    s.beta_mean = mean_of(b);
    s.alpha_lo = quantile(a, tail);
    s.alpha_hi = quantile(a, 1.0 - tail);
    s.beta_lo = quantile(b, tail);
    s.beta_hi = quantile(b, 1.0 - tail);
    s.bin = bin_discrimination(s.alpha_mean);
    out.push_back(std::move(s));
  }
  return out;
}

std::string to_string(ContrastQuantity q) {
  return q == ContrastQuantity::MeanAlpha ? "mean_alpha" : "mean_beta";
}

GroupContrast group_contrast(const PosteriorDraws& draws,
                             const ResponseMatrix& matrix,
                             ContrastQuantity quantity, ExamKind group_a,
                             ExamKind group_b, double ci_level) {
  check_ci_level(ci_level);
  auto items_a = matrix.items_of_kind(group_a);
  auto items_b = matrix.items_of_kind(group_b);
  require(!items_a.empty(), ErrorCode::InvalidArgument,
          "no items of kind " + to_string(group_a));
  require(!items_b.empty(), ErrorCode::InvalidArgument,
          "no items of kind " + to_string(group_b));
  auto cols = locate_columns(draws, matrix);
  const auto& param_cols =
      quantity == ContrastQuantity::MeanAlpha ? cols.alpha : cols.beta;

  GroupContrast out;
  out.quantity = quantity;
  out.group_a = group_a;
  out.group_b = group_b;

  std::size_t n_draws = draws.n_chains() * draws.n_iterations();
  out.delta_draws.reserve(n_draws);
  for (std::size_t c = 0; c < draws.n_chains(); ++c) {
    for (std::size_t it = 0; it < draws.n_iterations(); ++it) {
      double sum_a = 0.0, sum_b = 0.0;
      for (auto j : items_a)
        sum_a += draws.value(c, it, static_cast<std::size_t>(param_cols[j]));
      for (auto j : items_b)
        sum_b += draws.value(c, it, static_cast<std::size_t>(param_cols[j]));
      out.delta_draws.push_back(sum_a / items_a.size() - sum_b / items_b.size());
    }
  }
  out.delta_mean = mean_of(out.delta_draws);
  double tail = (1.0 - ci_level) / 2.0;
  out.ci_lo = quantile(out.delta_draws, tail);
  out.ci_hi = quantile(out.delta_draws, 1.0 - tail);
  std::size_t pos = 0;
  for (double d : out.delta_draws)
    if (d >= 0.0) ++pos;
  out.prob_positive = static_cast<double>(pos) / out.delta_draws.size();
  out.prob_negative = 1.0 - out.prob_positive;
  return out;
}

PpcResult posterior_predictive_proportion(const PosteriorDraws& draws,
                                          const ResponseMatrix& matrix,
                                          ExamKind group, std::uint64_t seed,
                                          double ci_level, int max_draws) {
  check_ci_level(ci_level);
  auto cols = locate_columns(draws, matrix);

  std::vector<const Response*> cells;
  for (const auto& r : matrix.responses)
    if (matrix.item_kind[r.item] == group) cells.push_back(&r);
  require(!cells.empty(), ErrorCode::EmptyDataset,
          "no responses of kind " + to_string(group));

  PpcResult out;
  out.group = group;
  long observed = 0;
  for (const auto* r : cells) observed += r->correct;
  out.observed_proportion = static_cast<double>(observed) / cells.size();

  std::size_t total_draws = draws.n_chains() * draws.n_iterations();
  std::size_t use = total_draws;
  std::size_t stride = 1;
  if (max_draws > 0 && static_cast<std::size_t>(max_draws) < total_draws) {
    use = static_cast<std::size_t>(max_draws);
    stride = total_draws / use;
  }

  PhiloxRng rng(seed, 0x50504331);  // dedicated replication stream
  std::size_t iters = draws.n_iterations();
  out.replicate_proportions.reserve(use);
  for (std::size_t k = 0; k < use; ++k) {
    std::size_t flat = k * stride;
    std::size_t c = flat / iters;
    std::size_t it = flat % iters;
    rng.set_block(flat);
    long correct = 0;
    for (const auto* r : cells) {
      double alpha =
          draws.value(c, it, static_cast<std::size_t>(cols.alpha[r->item]));
      double beta =
          draws.value(c, it, static_cast<std::size_t>(cols.beta[r->item]));
      double theta =
          draws.value(c, it, static_cast<std::size_t>(cols.theta[r->student]));
      double p = response_probability(theta, alpha, beta);
      if (rng.uniform() < p) ++correct;
    }
    out.replicate_proportions.push_back(static_cast<double>(correct) /
                                        cells.size());
  }
  double tail = (1.0 - ci_level) / 2.0;
  out.ci_lo = quantile(out.replicate_proportions, tail);
  out.ci_hi = quantile(out.replicate_proportions, 1.0 - tail);
  out.observed_inside = out.observed_proportion >= out.ci_lo &&
                        out.observed_proportion <= out.ci_hi;
  return out;
}

InformationCurve class_information_curve(const PosteriorDraws& draws,
                                         const ResponseMatrix& matrix,
                                         const std::string& class_id,
                                         const ThetaGrid& grid,
                                         bool full_posterior) {
  auto cit = matrix.class_items.find(class_id);
  require(cit != matrix.class_items.end(), ErrorCode::InvalidArgument,
          "unknown class '" + class_id + "'");
  require(!cit->second.empty(), ErrorCode::InvalidArgument,
          "class '" + class_id + "' has no semester-end items");
  auto cols = locate_columns(draws, matrix);

  if (!full_posterior) {
    std::vector<ItemCurveParams> items;
    items.reserve(cit->second.size());
    for (auto j : cit->second) {
      auto a = draws.pooled_column(static_cast<std::size_t>(cols.alpha[j]));
      auto b = draws.pooled_column(static_cast<std::size_t>(cols.beta[j]));
      items.push_back({mean_of(a), mean_of(b)});
    }
    return test_information(items, grid, class_id);
  }

  // Full-posterior mode: average the per-draw information curve.
  InformationCurve curve;
  curve.label = class_id;
  curve.grid = grid.points();
  curve.information.assign(curve.grid.size(), 0.0);
  std::size_t n_draws = draws.n_chains() * draws.n_iterations();
  std::vector<ItemCurveParams> items(cit->second.size());
  for (std::size_t c = 0; c < draws.n_chains(); ++c) {
    for (std::size_t it = 0; it < draws.n_iterations(); ++it) {
      for (std::size_t m = 0; m < cit->second.size(); ++m) {
        auto j = cit->second[m];
        items[m].alpha =
            draws.value(c, it, static_cast<std::size_t>(cols.alpha[j]));
        items[m].beta =
            draws.value(c, it, static_cast<std::size_t>(cols.beta[j]));
      }
      for (std::size_t k = 0; k < curve.grid.size(); ++k)
        curve.information[k] += smooth_information(items, curve.grid[k]);
    }
  }
  std::size_t argmax = 0;
  curve.reliability.resize(curve.grid.size());
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    curve.information[k] /= static_cast<double>(n_draws);
    curve.reliability[k] = conditional_reliability(curve.information[k]);
    if (curve.information[k] > curve.information[argmax]) argmax = k;
  }
  curve.peak_theta = curve.grid[argmax];
  curve.peak_information = curve.information[argmax];
  return curve;
}

}  // namespace examkit
