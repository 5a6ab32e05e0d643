#include "examkit/itemgen/question.hpp"

#include <algorithm>

#include "examkit/errors.hpp"

namespace examkit::itemgen {
namespace {

using nlohmann::json;

std::string require_string(const json& j, const char* key) {
  require(j.contains(key), ErrorCode::Parse,
          std::string("missing field '") + key + "'");
  require(j[key].is_string(), ErrorCode::Parse,
          std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

int require_bounded_int(const json& j, const char* key, int lo, int hi) {
  require(j.contains(key), ErrorCode::Parse,
          std::string("missing field '") + key + "'");
  const auto& v = j[key];
  require(v.is_number_integer(), ErrorCode::Parse,
          std::string("field '") + key + "' must be an integer");
  int n = v.get<int>();
  require(n >= lo && n <= hi, ErrorCode::Parse,
          std::string("field '") + key + "' outside [" + std::to_string(lo) +
              "," + std::to_string(hi) + "]");
  return n;
}

std::vector<std::string> optional_string_list(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  require(j[key].is_array(), ErrorCode::Parse,
          std::string("field '") + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j[key]) {
    require(e.is_string(), ErrorCode::Parse,
            std::string("field '") + key + "' must contain only strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

void validate_question(const Question& q) {
  require(!q.question.empty(), ErrorCode::Parse, "question text is empty");
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    require(!q.options[i].empty(), ErrorCode::Parse, "empty option text");
    for (std::size_t k = i + 1; k < q.options.size(); ++k)
      require(q.options[i] != q.options[k], ErrorCode::Parse,
              "duplicate option '" + q.options[i] + "'");
  }
  require(std::find(q.options.begin(), q.options.end(), q.answer) !=
              q.options.end(),
          ErrorCode::Parse, "answer does not match any option exactly");
  require(q.difficulty >= 1 && q.difficulty <= 10, ErrorCode::Parse,
          "difficulty outside [1,10]");
  require(q.quality >= 1 && q.quality <= 10, ErrorCode::Parse,
          "quality outside [1,10]");
}

json question_to_json(const Question& q) {
  json j;
  j["question"] = q.question;
  j["options"] = q.options;
  j["answer"] = q.answer;
  j["explanation"] = q.explanation;
  j["relevant_courses"] = q.relevant_courses;
  j["difficulty"] = q.difficulty;
  j["key_concepts"] = q.key_concepts;
  j["question_type"] = q.question_type;
  j["quality"] = q.quality;
  return j;
}

Question question_from_json(const json& j) {
  require(j.is_object(), ErrorCode::Parse, "question JSON is not an object");
  Question q;
  q.question = require_string(j, "question");
  require(j.contains("options") && j["options"].is_array(), ErrorCode::Parse,
          "field 'options' must be an array");
  require(j["options"].size() == 4, ErrorCode::Parse,
          "options must hold exactly 4 entries, got " +
              std::to_string(j["options"].size()));
  for (std::size_t i = 0; i < 4; ++i) {
    require(j["options"][i].is_string(), ErrorCode::Parse,
            "options must contain only strings");
    q.options[i] = j["options"][i].get<std::string>();
  }
  q.answer = require_string(j, "answer");
  q.explanation = j.contains("explanation") && j["explanation"].is_string()
                      ? j["explanation"].get<std::string>()
                      : std::string();
  q.relevant_courses = optional_string_list(j, "relevant_courses");
  q.difficulty = require_bounded_int(j, "difficulty", 1, 10);
  q.key_concepts = optional_string_list(j, "key_concepts");
  q.question_type = j.contains("question_type") && j["question_type"].is_string()
                        ? j["question_type"].get<std::string>()
                        : std::string();
  q.quality = j.contains("quality") ? require_bounded_int(j, "quality", 1, 10) : 1;
  validate_question(q);
  return q;
}

void CourseContext::validate() const {
  require(!course_name.empty(), ErrorCode::InvalidArgument,
          "course_name is empty");
  require(!description.empty() || !exam_content.empty() ||
              !syllabus_content.empty(),
          ErrorCode::InvalidArgument,
          "course needs at least one of description, exam content, syllabus");
}

json exam_to_json(const Exam& exam) {
  json j;
  j["course_name"] = exam.course_name;
  j["questions"] = json::array();
  for (std::size_t i = 0; i < exam.questions.size(); ++i) {
    json q = question_to_json(exam.questions[i]);
    q["judged_difficulty"] = exam.question_difficulty[i];
    j["questions"].push_back(std::move(q));
  }
  j["provenance"] = json::array();
  for (const auto& p : exam.provenance) {
    json e;
    e["id"] = p.id;
    e["topup_round"] = p.topup_round;
    e["refine_label"] = p.refine_label == JudgeLabel::Keep ? "keep" : "remove";
    e["judge_failed"] = p.judge_failed;
    e["assessed"] = p.assessed;
    e["approved"] = p.approved;
    e["judged_difficulty"] = p.judged_difficulty;
    e["exam_rank"] = p.exam_rank;
    j["provenance"].push_back(std::move(e));
  }
  return j;
}

Exam exam_from_json(const json& j) {
  require(j.is_object(), ErrorCode::Parse, "exam JSON is not an object");
  Exam exam;
  exam.course_name = require_string(j, "course_name");
  require(j.contains("questions") && j["questions"].is_array(),
          ErrorCode::Parse, "exam lacks a questions array");
  for (const auto& q : j["questions"]) {
    exam.questions.push_back(question_from_json(q));
    exam.question_difficulty.push_back(
        q.contains("judged_difficulty")
            ? require_bounded_int(q, "judged_difficulty", 1, 10)
            : exam.questions.back().difficulty);
  }
  if (j.contains("provenance")) {
    require(j["provenance"].is_array(), ErrorCode::Parse,
            "provenance must be an array");
    for (const auto& e : j["provenance"]) {
      Provenance p;
      p.id = require_bounded_int(e, "id", 0, 1 << 30);
      p.topup_round = require_bounded_int(e, "topup_round", 0, 1 << 30);
      p.refine_label = require_string(e, "refine_label") == "keep"
                           ? JudgeLabel::Keep
                           : JudgeLabel::Remove;
      p.judge_failed = e.value("judge_failed", false);
      p.assessed = e.value("assessed", false);
      p.approved = e.value("approved", false);
      p.judged_difficulty = e.value("judged_difficulty", 0);
      p.exam_rank = e.value("exam_rank", -1);
      exam.provenance.push_back(p);
    }
  }
  return exam;
}

std::string to_canonical_json(const json& j) {
  // nlohmann objects iterate in key order already; dump(2) is stable.
  return j.dump(2) + "\n";
}

}  // namespace examkit::itemgen
