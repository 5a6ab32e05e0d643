#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "examkit/types.hpp"

namespace examkit {

struct RejectedRow {
  int line_number = 0;  // 1-based, header is line 1
  std::string reason;
  std::string raw;
};

struct AttemptFile {
  std::vector<RawAttempt> attempts;
  std::vector<RejectedRow> rejected;
  int total_rows = 0;  // data rows seen, accepted + rejected
};

// Reads student_id,item_id,correct,attempt,exam_kind,class_id rows.
// Malformed rows are collected, not fatal; a bad header is.
AttemptFile read_attempts_csv(const std::filesystem::path& path);

void write_attempts_csv(const std::filesystem::path& path,
                        const std::vector<RawAttempt>& rows);

// Collapses repeated attempts of a (student, item) pair to the best
// outcome. Output is sorted by (student_id, item_id) and independent of
// input order. An item appearing under two exam kinds is a
// data-integrity error.
std::vector<ResponseRecord> superscore(const std::vector<RawAttempt>& attempts);

struct IngestPolicy {
  // Keep only students with at least one pre-test row and at least one
  // semester-end (ai_generated or standardized) row.
  bool require_pretest_and_exam = true;
  // When set, items a student's cohort saw but the student has no row for
  // become explicit incorrect responses instead of missing cells.
  bool absent_is_incorrect = false;
};

struct BuildReport {
  int students_in = 0;
  int students_kept = 0;
  std::map<std::string, int> dropped_by_reason;
  std::map<std::string, std::string> dropped_students;  // id -> reason
  int filled_absent_cells = 0;
};

struct BuildResult {
  ResponseMatrix matrix;
  BuildReport report;
};

BuildResult build_matrix(const std::vector<ResponseRecord>& records,
                         const IngestPolicy& policy = {});

// Plain-text summary of parse rejections and drop accounting.
void write_validation_report(const std::filesystem::path& path,
                             const AttemptFile& file, const BuildReport& report);

}  // namespace examkit
