#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace examkit {

enum class ExamKind { PreTest, AiGenerated, Standardized };

// Canonical CSV spellings: pre_test, ai_generated, standardized.
std::string to_string(ExamKind kind);
std::optional<ExamKind> parse_exam_kind(const std::string& text);
constexpr int kNumExamKinds = 3;

// One raw row of a response export, before superscoring.
struct RawAttempt {
  std::string student_id;
  std::string item_id;
  int correct = 0;  // 0 or 1
  int attempt_index = 0;
  ExamKind exam_kind = ExamKind::PreTest;
  std::string class_id;
};

// One deduplicated outcome, attempt dimension collapsed.
struct ResponseRecord {
  std::string student_id;
  std::string item_id;
  int correct = 0;
  ExamKind exam_kind = ExamKind::PreTest;
  std::string class_id;
};

// A dense-indexed response cell. Absent cells mean "not administered",
// never "incorrect".
struct Response {
  std::int32_t student = 0;
  std::int32_t item = 0;
  std::uint8_t correct = 0;
};

// Sparse student x item outcome matrix with the id bijections and item
// metadata every downstream stage needs. Indices are dense and assigned
// by lexicographic id order, so rebuilding from the same CSV always
// yields the same indexing.
struct ResponseMatrix {
  std::vector<std::string> student_ids;  // index -> id, sorted
  std::vector<std::string> item_ids;     // index -> id, sorted
  std::vector<ExamKind> item_kind;       // per item index
  std::vector<Response> responses;

  // class_id -> semester-end item indices administered to that class,
  // derived from response rows. Pre-test items are shared and excluded.
  std::map<std::string, std::vector<std::int32_t>> class_items;
  std::map<std::string, ExamKind> class_kind;

  std::size_t n_students() const { return student_ids.size(); }
  std::size_t n_items() const { return item_ids.size(); }

  std::vector<std::int32_t> items_of_kind(ExamKind kind) const;

  // Checks index ranges, (student,item) uniqueness, and binary outcomes.
  // Throws Error(InvalidArgument) on violation.
  void validate() const;
};

// Model parameters on the sampling scale: alpha and the hierarchy scales
// are stored as logs so positivity holds by construction.
struct ModelParameters {
  std::vector<double> theta;      // N student abilities
  std::vector<double> log_alpha;  // J log-discriminations
  std::vector<double> beta;       // J difficulties
  double mu_alpha = 0.0;
  double mu_beta = 0.0;
  double log_sigma_alpha = 0.0;
  double log_sigma_beta = 0.0;

  std::size_t n_students() const { return theta.size(); }
  std::size_t n_items() const { return log_alpha.size(); }
  // Unconstrained dimension: N + 2J + 4.
  std::size_t dim() const { return theta.size() + 2 * log_alpha.size() + 4; }

  bool all_finite() const;
};

}  // namespace examkit
