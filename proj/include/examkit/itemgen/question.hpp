#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

namespace examkit::itemgen {

// Multiple-choice question in the wire schema the generator prompt asks
// for; field names below match the JSON keys one to one.
struct Question {
  std::string question;
  std::array<std::string, 4> options;
  std::string answer;  // must equal one option exactly
  std::string explanation;
  std::vector<std::string> relevant_courses;
  int difficulty = 1;  // 1..10, generator's self-report
  std::vector<std::string> key_concepts;
  std::string question_type;
  int quality = 1;  // 1..10
};

// Throws Error(Parse) when an invariant fails: four pairwise distinct
// options, answer present among them, difficulty/quality in range.
void validate_question(const Question& q);

nlohmann::json question_to_json(const Question& q);
// Parses and validates; throws Error(Parse) with the offending field.
Question question_from_json(const nlohmann::json& j);

struct CourseContext {
  std::string course_name;
  std::string description;
  std::string exam_content;
  std::string syllabus_content;

  void validate() const;  // name non-empty, some material present
};

enum class JudgeLabel { Keep, Remove };

struct JudgeVerdict {
  JudgeLabel label = JudgeLabel::Remove;
  std::string raw_reply;
};

struct FinalAssessment {
  Question question;
  bool is_appropriate = false;
  bool answer_confirmed = false;
  int judged_difficulty = 1;  // 1..10, re-elicited from the judge
  bool approved() const { return is_appropriate && answer_confirmed; }
};

// Per-question pipeline trace. id is the 0-based generation index and
// doubles as the tie-break key for equal judged difficulty.
struct Provenance {
  int id = 0;
  int topup_round = 0;  // 0 for the initial batch
  JudgeLabel refine_label = JudgeLabel::Remove;
  bool judge_failed = false;  // refine verdict unusable, treated as Remove
  bool assessed = false;      // reached final judging
  bool approved = false;
  int judged_difficulty = 0;  // valid when assessed
  int exam_rank = -1;         // 0-based position in the exam, -1 if unused
};

struct GeneratedQuestion {
  Question question;
  Provenance provenance;
};

struct Exam {
  std::string course_name;
  std::vector<Question> questions;  // judged difficulty descending
  std::vector<int> question_difficulty;  // judge's rating, same order
  std::vector<Provenance> provenance;    // whole pool, generation order
};

nlohmann::json exam_to_json(const Exam& exam);
Exam exam_from_json(const nlohmann::json& j);

// Canonical serialization: sorted keys, two-space indent, trailing
// newline. Identical values give identical bytes.
std::string to_canonical_json(const nlohmann::json& j);

}  // namespace examkit::itemgen
