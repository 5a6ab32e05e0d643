#pragma once

#include <optional>
#include <string>
#include <vector>

#include "examkit/errors.hpp"
#include "examkit/itemgen/backend.hpp"
#include "examkit/itemgen/prompts.hpp"
#include "examkit/itemgen/question.hpp"

namespace examkit::itemgen {

struct PipelineConfig {
  int target_good = 20;     // refine loop stops at this many keeps
  int exam_size = 10;
  int max_iterations = 200;  // generation cap across all rounds
  int parse_retries = 3;     // fresh completions per unparseable reply
  int max_topup_rounds = 3;
  int topup_batch = 20;      // extra good questions per top-up round
  std::vector<Question> calibration;  // exactly 5 exemplars
  PromptTemplates templates = PromptTemplates::defaults();

  void validate() const;
};

// Extracts the first balanced JSON object from a reply that may wrap it
// in code fences or prose. Returns nullopt when none parses.
std::optional<nlohmann::json> extract_first_json_object(const std::string& text);

// One generation call: prompt the backend, parse the reply into a valid
// Question. Parse failures get fresh completions, retries times in total;
// exhaustion throws Error(GenerationFailure) carrying the last reply.
Question generate_question(LlmBackend& backend, const std::string& prompt,
                           int retries = 3);

// One refine-judge call over the rendered judge prompt. Unparseable
// verdicts retry with fresh completions; exhaustion throws
// Error(JudgingFailure).
JudgeVerdict judge_question(LlmBackend& backend, const CourseContext& context,
                            const Question& question,
                            const std::vector<Question>& good,
                            const std::vector<Question>& bad,
                            const std::vector<Question>& calibration,
                            const PromptTemplates& templates,
                            int retries = 3);

struct RefineResult {
  std::vector<GeneratedQuestion> good;
  std::vector<GeneratedQuestion> bad;
  int total_generated = 0;
};

// Carries the partial pools when the loop dies of iteration starvation.
class LoopExhaustionError : public Error {
 public:
  LoopExhaustionError(const std::string& what, RefineResult partial)
      : Error(ErrorCode::LoopExhaustion, what), partial_(std::move(partial)) {}
  const RefineResult& partial() const { return partial_; }

 private:
  RefineResult partial_;
};

// Carries whatever could be assembled when top-up rounds run out.
class AssemblyFailureError : public Error {
 public:
  AssemblyFailureError(const std::string& what, Exam partial)
      : Error(ErrorCode::AssemblyFailure, what), partial_(std::move(partial)) {}
  const Exam& partial() const { return partial_; }

 private:
  Exam partial_;
};

// Generate -> judge -> refresh until the good pool reaches target_good.
// A judge verdict that stays unparseable counts as Remove with its
// provenance flagged, never as a silent keep.
RefineResult refine_loop(LlmBackend& backend, const CourseContext& context,
                         const PipelineConfig& config);

// Difficulty/fit/answer assessment for each question, in order.
std::vector<FinalAssessment> final_judging(LlmBackend& backend,
                                           const CourseContext& context,
                                           const std::vector<Question>& questions,
                                           const PipelineConfig& config);

// Full Algorithm: refine to 20 good, final-judge, top up in 20-question
// batches (re-judging the whole pool) while approvals fall short, then
// keep the exam_size hardest approved questions, difficulty descending,
// ties broken by generation order.
Exam assemble_exam(LlmBackend& backend, const CourseContext& context,
                   const PipelineConfig& config);

// Greedy benchmark selection over an assessed bank (difficulty and
// key_concepts fields already filled in): descending difficulty with
// course-fit and concept-novelty constraints, relaxed in two further
// passes when the bank cannot fill n under the strict rules.
Exam select_benchmark(const std::vector<Question>& bank,
                      const std::vector<std::string>& course_concepts,
                      const std::string& course_name, int n = 10);

}  // namespace examkit::itemgen
