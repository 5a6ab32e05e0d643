#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "examkit/analysis.hpp"
#include "examkit/errors.hpp"
#include "examkit/irt_model.hpp"
#include "examkit/rng.hpp"

using namespace examkit;

namespace {

// Hand-built draws object over a toy matrix: one chain, explicit per-draw
// setter access by parameter name.
struct DrawsBuilder {
  ResponseMatrix matrix;
  PosteriorDraws draws;

  DrawsBuilder(std::size_t n_students, std::vector<ExamKind> kinds,
               std::size_t n_iter) {
    for (std::size_t i = 0; i < n_students; ++i)
      matrix.student_ids.push_back("s" + std::to_string(i + 1));
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      matrix.item_ids.push_back("i" + std::to_string(j + 1));
      matrix.item_kind.push_back(kinds[j]);
    }
    draws.parameter_names =
        constrained_parameter_names(n_students, kinds.size());
    draws.draws.resize(1);
    draws.draws[0].assign(n_iter * draws.parameter_names.size(), 0.0);
    draws.chain_stats.resize(1);
    // defaults that keep every quantity well defined
    for (std::size_t it = 0; it < n_iter; ++it) {
      for (std::size_t j = 0; j < kinds.size(); ++j)
        set(it, "alpha[" + std::to_string(j + 1) + "]", 1.0);
      set(it, "sigma_alpha", 1.0);
      set(it, "sigma_beta", 1.0);
    }
  }

  void set(std::size_t iter, const std::string& name, double v) {
    int p = draws.parameter_index(name);
    REQUIRE(p >= 0);
    draws.draws[0][iter * draws.n_parameters() + static_cast<std::size_t>(p)] = v;
  }
};

}  // namespace

TEST_CASE("item information matches the frozen closed-form value") {
  CHECK(std::abs(item_information(1.3, -0.45, 0.0) -
                 0.3883185644155430451246) < 1e-15);
  // at theta == beta the value is alpha^2 / 4
  CHECK(item_information(2.0, 0.7, 0.7) == doctest::Approx(1.0));
  CHECK_THROWS_AS(item_information(0.0, 0.0, 0.0), Error);
  CHECK_THROWS_AS(item_information(1.0, std::nan(""), 0.0), Error);
}

TEST_CASE("reliability reproduces the reported information pairs") {
  CHECK(std::abs(conditional_reliability(3.85) - 0.7938144329896907216495) <
        1e-15);
  CHECK(std::abs(conditional_reliability(2.61) - 0.7229916897506925207756) <
        1e-15);
  // the published 2-decimal values
  CHECK(std::round(conditional_reliability(3.85) * 100.0) / 100.0 == 0.79);
  CHECK(std::round(conditional_reliability(2.61) * 100.0) / 100.0 == 0.72);
  CHECK(conditional_reliability(0.0) == 0.0);
  CHECK_THROWS_AS(conditional_reliability(-0.1), Error);
}

TEST_CASE("discrimination bins split at the documented boundaries") {
  CHECK(bin_discrimination(0.2) == DiscriminationBin::BelowScale);
  CHECK(bin_discrimination(0.35) == DiscriminationBin::BelowScale);
  CHECK(bin_discrimination(0.36) == DiscriminationBin::Low);
  CHECK(bin_discrimination(0.64) == DiscriminationBin::Low);
  CHECK(bin_discrimination(0.65) == DiscriminationBin::Moderate);
  CHECK(bin_discrimination(1.34) == DiscriminationBin::Moderate);
  CHECK(bin_discrimination(1.35) == DiscriminationBin::High);
  CHECK(bin_discrimination(1.7) == DiscriminationBin::High);
  CHECK(bin_discrimination(1.71) == DiscriminationBin::VeryHigh);
  CHECK(to_string(DiscriminationBin::Moderate) == "moderate");
}

TEST_CASE("theta grid is inclusive and hits zero exactly") {
  ThetaGrid grid;
  auto pts = grid.points();
  REQUIRE(pts.size() == 161);
  CHECK(pts.front() == -4.0);
  CHECK(pts.back() == 4.0);
  CHECK(pts[80] == 0.0);
}

TEST_CASE("single item curves peak at beta with height alpha^2/4") {
  for (double beta : {0.0, 0.35, -1.2, 0.123456, 2.71828}) {
    for (double alpha : {0.6, 1.0, 1.8}) {
      auto curve = test_information({{alpha, beta}});
      CHECK(std::abs(curve.peak_theta - beta) < 1e-9);
      CHECK(std::abs(curve.peak_information - alpha * alpha / 4.0) < 1e-9);
    }
  }
}

TEST_CASE("ten identical items peak at exactly the summed height") {
  std::vector<ItemCurveParams> items(10, {1.0, 0.0});
  auto curve = test_information(items);
  CHECK(curve.peak_information == 2.5);
  CHECK(curve.peak_theta == 0.0);
  // reliability is I/(1+I) pointwise
  for (std::size_t k = 0; k < curve.grid.size(); k += 16)
    CHECK(curve.reliability[k] ==
          doctest::Approx(curve.information[k] / (1.0 + curve.information[k])));
}

TEST_CASE("test information is exactly additive over item partitions") {
  PhiloxRng rng(2718, 0);
  ThetaGrid grid;
  for (int rep = 0; rep < 300; ++rep) {
    int j = 1 + static_cast<int>(rng.uniform() * 30);
    std::vector<ItemCurveParams> all, part_a, part_b;
    for (int k = 0; k < j; ++k) {
      ItemCurveParams p{0.2 + rng.uniform() * 2.3, rng.uniform(-3.0, 3.0)};
      all.push_back(p);
      (rng.uniform() < 0.5 ? part_a : part_b).push_back(p);
    }
    auto whole = test_information(all, grid);
    auto a = part_a.empty() ? InformationCurve{} : test_information(part_a, grid);
    auto b = part_b.empty() ? InformationCurve{} : test_information(part_b, grid);
    for (std::size_t k = 0; k < whole.grid.size(); ++k) {
      double sum = (part_a.empty() ? 0.0 : a.information[k]) +
                   (part_b.empty() ? 0.0 : b.information[k]);
      // bit-for-bit, not approximately
      CHECK(whole.information[k] == sum);
    }
  }
}

TEST_CASE("empty item set is rejected") {
  CHECK_THROWS_AS(test_information({}), Error);
  ThetaGrid bad;
  bad.step = -0.1;
  CHECK_THROWS_AS(test_information({{1.0, 0.0}}, bad), Error);
}

TEST_CASE("item summaries aggregate the posterior columns") {
  DrawsBuilder b(1, {ExamKind::PreTest, ExamKind::AiGenerated}, 4);
  double alphas[4] = {1.0, 2.0, 3.0, 4.0};
  double betas[4] = {-1.0, 0.0, 1.0, 2.0};
  for (std::size_t it = 0; it < 4; ++it) {
    b.set(it, "alpha[1]", alphas[it]);
    b.set(it, "beta[1]", betas[it]);
    b.set(it, "alpha[2]", 0.5);
    b.set(it, "beta[2]", 0.25);
  }
  auto summaries = summarize_items(b.draws, b.matrix, 0.5);
  REQUIRE(summaries.size() == 2);
  CHECK(summaries[0].item_id == "i1");
  CHECK(summaries[0].exam_kind == ExamKind::PreTest);
  CHECK(summaries[0].alpha_mean == doctest::Approx(2.5));
  CHECK(summaries[0].alpha_lo == doctest::Approx(1.75));
  CHECK(summaries[0].alpha_hi == doctest::Approx(3.25));
  CHECK(summaries[0].beta_mean == doctest::Approx(0.5));
  CHECK(summaries[0].bin == DiscriminationBin::VeryHigh);
  CHECK(summaries[1].alpha_mean == doctest::Approx(0.5));
  CHECK(summaries[1].bin == DiscriminationBin::Low);
}

TEST_CASE("group contrast of a constant offset is exact with zero width") {
  DrawsBuilder b(1,
                 {ExamKind::AiGenerated, ExamKind::AiGenerated,
                  ExamKind::Standardized, ExamKind::Standardized},
                 8);
  const double c = 0.5;
  for (std::size_t it = 0; it < 8; ++it) {
    double b1 = 0.25 + static_cast<double>(it);
    double b2 = -0.75 - static_cast<double>(it);
    b.set(it, "beta[3]", b1);
    b.set(it, "beta[4]", b2);
    b.set(it, "beta[1]", b1 + c);
    b.set(it, "beta[2]", b2 + c);
  }
  auto contrast =
      group_contrast(b.draws, b.matrix, ContrastQuantity::MeanBeta,
                     ExamKind::AiGenerated, ExamKind::Standardized);
  REQUIRE(contrast.delta_draws.size() == 8);
  for (double d : contrast.delta_draws) CHECK(d == c);
  CHECK(contrast.delta_mean == c);
  CHECK(contrast.ci_lo == c);
  CHECK(contrast.ci_hi == c);
  CHECK(contrast.prob_positive == 1.0);
  CHECK(contrast.prob_negative == 0.0);
}

TEST_CASE("group contrast is antisymmetric draw for draw") {
  DrawsBuilder b(1,
                 {ExamKind::AiGenerated, ExamKind::Standardized,
                  ExamKind::Standardized},
                 16);
  PhiloxRng rng(5, 0);
  for (std::size_t it = 0; it < 16; ++it) {
    b.set(it, "beta[1]", rng.normal());
    b.set(it, "beta[2]", rng.normal());
    b.set(it, "beta[3]", rng.normal());
    b.set(it, "alpha[1]", std::exp(0.3 * rng.normal()));
    b.set(it, "alpha[2]", std::exp(0.3 * rng.normal()));
    b.set(it, "alpha[3]", std::exp(0.3 * rng.normal()));
  }
  for (auto q : {ContrastQuantity::MeanBeta, ContrastQuantity::MeanAlpha}) {
    auto ab = group_contrast(b.draws, b.matrix, q, ExamKind::AiGenerated,
                             ExamKind::Standardized);
    auto ba = group_contrast(b.draws, b.matrix, q, ExamKind::Standardized,
                             ExamKind::AiGenerated);
    REQUIRE(ab.delta_draws.size() == ba.delta_draws.size());
    for (std::size_t k = 0; k < ab.delta_draws.size(); ++k)
      CHECK(ab.delta_draws[k] == -ba.delta_draws[k]);
  }
}

TEST_CASE("contrast without items of a kind is rejected") {
  DrawsBuilder b(1, {ExamKind::AiGenerated, ExamKind::AiGenerated}, 4);
  CHECK_THROWS_AS(group_contrast(b.draws, b.matrix, ContrastQuantity::MeanBeta,
                                 ExamKind::AiGenerated,
                                 ExamKind::Standardized),
                  Error);
}

TEST_CASE("ppc on a point-mass saturated posterior brackets the observation") {
  DrawsBuilder b(2, {ExamKind::PreTest, ExamKind::PreTest}, 10);
  b.matrix.responses = {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}};
  for (std::size_t it = 0; it < 10; ++it) {
    b.set(it, "theta[1]", 10.0);
    b.set(it, "theta[2]", 10.0);
    b.set(it, "alpha[1]", 5.0);
    b.set(it, "alpha[2]", 5.0);
    b.set(it, "beta[1]", -10.0);
    b.set(it, "beta[2]", -10.0);
  }
  auto ppc = posterior_predictive_proportion(b.draws, b.matrix,
                                             ExamKind::PreTest, 42);
  CHECK(ppc.observed_proportion == 1.0);
  REQUIRE(ppc.replicate_proportions.size() == 10);
  for (double r : ppc.replicate_proportions) CHECK(r == 1.0);
  CHECK(ppc.ci_lo == 1.0);
  CHECK(ppc.ci_hi == 1.0);
  CHECK(ppc.observed_inside);
}

TEST_CASE("ppc thinning and determinism") {
  DrawsBuilder b(2, {ExamKind::PreTest}, 50);
  b.matrix.responses = {{0, 0, 1}, {1, 0, 0}};
  for (std::size_t it = 0; it < 50; ++it) {
    b.set(it, "theta[1]", 0.4);
    b.set(it, "theta[2]", -0.4);
    b.set(it, "beta[1]", 0.1 * static_cast<double>(it % 5));
  }
  auto full = posterior_predictive_proportion(b.draws, b.matrix,
                                              ExamKind::PreTest, 7);
  CHECK(full.replicate_proportions.size() == 50);
  auto thin = posterior_predictive_proportion(b.draws, b.matrix,
                                              ExamKind::PreTest, 7, 0.95, 10);
  CHECK(thin.replicate_proportions.size() == 10);
  auto again = posterior_predictive_proportion(b.draws, b.matrix,
                                               ExamKind::PreTest, 7);
  CHECK(full.replicate_proportions == again.replicate_proportions);
  auto other_seed = posterior_predictive_proportion(b.draws, b.matrix,
                                                    ExamKind::PreTest, 8);
  CHECK(full.replicate_proportions != other_seed.replicate_proportions);
}

TEST_CASE("class curves from a point-mass posterior match direct evaluation") {
  DrawsBuilder b(1, {ExamKind::PreTest, ExamKind::AiGenerated,
                     ExamKind::AiGenerated},
                 6);
  // dyadic point values so the posterior mean reproduces them bit for bit
  b.matrix.class_items["c1"] = {1, 2};
  b.matrix.class_kind["c1"] = ExamKind::AiGenerated;
  for (std::size_t it = 0; it < 6; ++it) {
    b.set(it, "alpha[2]", 1.375);
    b.set(it, "alpha[3]", 0.875);
    b.set(it, "beta[2]", 0.3125);
    b.set(it, "beta[3]", -0.625);
  }
  auto curve = class_information_curve(b.draws, b.matrix, "c1");
  auto direct = test_information({{1.375, 0.3125}, {0.875, -0.625}});
  REQUIRE(curve.grid.size() == direct.grid.size());
  for (std::size_t k = 0; k < curve.grid.size(); ++k)
    CHECK(curve.information[k] == direct.information[k]);
  CHECK(curve.peak_theta == direct.peak_theta);

  // full-posterior averaging over identical draws changes nothing
  auto averaged = class_information_curve(b.draws, b.matrix, "c1", {}, true);
  for (std::size_t k = 0; k < curve.grid.size(); k += 20)
    CHECK(averaged.information[k] == doctest::Approx(direct.information[k]));

  CHECK_THROWS_AS(class_information_curve(b.draws, b.matrix, "zzz"), Error);
}
