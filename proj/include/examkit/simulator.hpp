#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "examkit/types.hpp"

namespace examkit {

struct SimItem {
  std::string item_id;
  double alpha = 1.0;
  double beta = 0.0;
  ExamKind kind = ExamKind::PreTest;
  std::string class_id;  // empty for shared pre-test items
};

struct SimulationSpec {
  int n_students = 0;
  std::vector<SimItem> items;
  // Empty: abilities are drawn N(0,1) from (seed). Otherwise must have
  // exactly n_students entries.
  std::vector<double> fixed_theta;
  // Per-student assigned item indices; empty means the default assignment
  // (all pre-test items plus one class's items, classes rotated).
  std::vector<std::vector<int>> assignment;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulationResult {
  std::vector<RawAttempt> attempts;  // one attempt per administered cell
  ModelParameters truth;             // realized abilities and item parameters
  std::vector<std::string> student_class;  // class assigned to each student
};

// Bernoulli responses from the two-parameter logistic model. The uniform
// behind cell (student i, item j) depends only on (seed, i, j), so raising
// an ability with the same seed can flip outcomes only from 0 to 1.
SimulationResult simulate_responses(const SimulationSpec& spec);

struct PriorDrawConfig {
  int n_pretest = 10;
  int n_classes = 4;
  int items_per_class = 10;
  int n_students = 100;
  std::uint64_t seed = 0;
  // Exam kinds rotate over classes: even index ai_generated, odd
  // standardized, unless overridden.
  std::vector<ExamKind> class_kinds;
};

// Draws item parameters and hyperparameters from the model's own priors
// and packages them as a simulation spec.
SimulationSpec draw_spec_from_priors(const PriorDrawConfig& cfg);

}  // namespace examkit
