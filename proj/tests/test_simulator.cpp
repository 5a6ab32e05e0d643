#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "examkit/errors.hpp"
#include "examkit/ingest.hpp"
#include "examkit/simulator.hpp"

using namespace examkit;
namespace fs = std::filesystem;

namespace {

SimulationSpec one_item_spec(int n_students, double alpha, double beta,
                             double theta, std::uint64_t seed) {
  SimulationSpec spec;
  spec.n_students = n_students;
  spec.items.push_back({"q1", alpha, beta, ExamKind::PreTest, ""});
  spec.fixed_theta.assign(n_students, theta);
  spec.assignment.assign(n_students, {0});
  spec.seed = seed;
  return spec;
}

double proportion_correct(const SimulationResult& r) {
  double s = 0;
  for (const auto& a : r.attempts) s += a.correct;
  return s / r.attempts.size();
}

}  // namespace

TEST_CASE("matched ability and difficulty gives a coin flip") {
  auto res = simulate_responses(one_item_spec(4000, 1.7, 0.3, 0.3, 11));
  REQUIRE(res.attempts.size() == 4000);
  CHECK(std::abs(proportion_correct(res) - 0.5) < 0.03);
}

TEST_CASE("saturated abilities give deterministic outcomes") {
  auto hi = simulate_responses(one_item_spec(500, 2.0, 0.0, 9.0, 5));
  auto lo = simulate_responses(one_item_spec(500, 2.0, 0.0, -9.0, 5));
  CHECK(proportion_correct(hi) == 1.0);
  CHECK(proportion_correct(lo) == 0.0);
}

TEST_CASE("probabilities track the logistic curve") {
  // theta - beta = 1 with alpha 1: P = sigmoid(1) ~= 0.731
  auto res = simulate_responses(one_item_spec(4000, 1.0, 0.0, 1.0, 17));
  CHECK(std::abs(proportion_correct(res) - 0.7310585786300049) < 0.03);
}

TEST_CASE("raising one ability can only flip outcomes upward") {
  SimulationSpec spec;
  spec.n_students = 300;
  for (int j = 0; j < 8; ++j)
    spec.items.push_back({"q" + std::to_string(j + 1), 1.2, 0.2 * j - 0.8,
                          ExamKind::PreTest, ""});
  spec.assignment.assign(300, {0, 1, 2, 3, 4, 5, 6, 7});
  spec.seed = 23;
  spec.fixed_theta.assign(300, -0.5);
  auto low = simulate_responses(spec);
  spec.fixed_theta.assign(300, 0.75);
  auto high = simulate_responses(spec);

  REQUIRE(low.attempts.size() == high.attempts.size());
  for (std::size_t k = 0; k < low.attempts.size(); ++k) {
    CHECK(low.attempts[k].student_id == high.attempts[k].student_id);
    CHECK(low.attempts[k].item_id == high.attempts[k].item_id);
    // coupled uniforms: correctness is monotone in ability
    CHECK(high.attempts[k].correct >= low.attempts[k].correct);
  }
}

TEST_CASE("identical specs reproduce identical attempts") {
  PriorDrawConfig cfg;
  cfg.n_students = 40;
  cfg.seed = 99;
  auto spec = draw_spec_from_priors(cfg);
  auto a = simulate_responses(spec);
  auto b = simulate_responses(spec);
  REQUIRE(a.attempts.size() == b.attempts.size());
  for (std::size_t k = 0; k < a.attempts.size(); ++k) {
    CHECK(a.attempts[k].student_id == b.attempts[k].student_id);
    CHECK(a.attempts[k].item_id == b.attempts[k].item_id);
    CHECK(a.attempts[k].correct == b.attempts[k].correct);
    CHECK(a.attempts[k].exam_kind == b.attempts[k].exam_kind);
    CHECK(a.attempts[k].class_id == b.attempts[k].class_id);
  }
  CHECK(a.truth.theta == b.truth.theta);
  CHECK(a.truth.log_alpha == b.truth.log_alpha);
}

TEST_CASE("prior-drawn specs have the advertised shape") {
  PriorDrawConfig cfg;
  cfg.n_pretest = 10;
  cfg.n_classes = 4;
  cfg.items_per_class = 10;
  cfg.n_students = 60;
  cfg.seed = 7;
  auto spec = draw_spec_from_priors(cfg);

  REQUIRE(spec.items.size() == 50);
  int pretest = 0;
  std::map<std::string, int> per_class;
  std::map<std::string, ExamKind> class_kind;
  for (const auto& it : spec.items) {
    CHECK(it.alpha > 0.0);
    CHECK(std::isfinite(it.beta));
    if (it.kind == ExamKind::PreTest) {
      ++pretest;
      CHECK(it.class_id.empty());
    } else {
      ++per_class[it.class_id];
      class_kind[it.class_id] = it.kind;
    }
  }
  CHECK(pretest == 10);
  REQUIRE(per_class.size() == 4);
  for (const auto& [cls, n] : per_class) CHECK(n == 10);
  // kinds alternate over classes
  int ai = 0, std_count = 0;
  for (const auto& [cls, kind] : class_kind)
    (kind == ExamKind::AiGenerated ? ai : std_count)++;
  CHECK(ai == 2);
  CHECK(std_count == 2);
}

TEST_CASE("spec validation catches inconsistent shapes") {
  SimulationSpec spec;
  spec.n_students = 5;
  spec.items.push_back({"q1", 1.0, 0.0, ExamKind::PreTest, ""});
  spec.fixed_theta = {0.0, 0.0};  // wrong length
  CHECK_THROWS_AS(spec.validate(), Error);

  spec.fixed_theta.clear();
  spec.assignment.assign(5, {3});  // item index out of range
  CHECK_THROWS_AS(simulate_responses(spec), Error);

  SimulationSpec empty;
  CHECK_THROWS_AS(simulate_responses(empty), Error);
}

TEST_CASE("simulated attempts survive the ingest path") {
  PriorDrawConfig cfg;
  cfg.n_pretest = 5;
  cfg.n_classes = 2;
  cfg.items_per_class = 6;
  cfg.n_students = 44;
  cfg.seed = 31;
  auto spec = draw_spec_from_priors(cfg);
  auto sim = simulate_responses(spec);

  auto dir = fs::temp_directory_path() / "examkit_sim_roundtrip";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto csv = dir / "responses.csv";
  write_attempts_csv(csv, sim.attempts);
  auto file = read_attempts_csv(csv);
  CHECK(file.rejected.empty());
  REQUIRE(file.attempts.size() == sim.attempts.size());

  auto records = superscore(file.attempts);
  auto built = build_matrix(records);
  CHECK(built.matrix.n_students() == 44);
  CHECK(built.matrix.n_items() == 17);
  CHECK(built.report.students_kept == 44);
  built.matrix.validate();

  // every student answered the pre-test plus one class's items
  std::map<std::int32_t, int> per_student;
  for (const auto& r : built.matrix.responses) ++per_student[r.student];
  for (const auto& [s, n] : per_student) CHECK(n == 11);

  REQUIRE(built.matrix.class_items.size() == 2);
  for (const auto& [cls, items] : built.matrix.class_items)
    CHECK(items.size() == 6);
  CHECK(built.matrix.items_of_kind(ExamKind::PreTest).size() == 5);
  fs::remove_all(dir);
}
