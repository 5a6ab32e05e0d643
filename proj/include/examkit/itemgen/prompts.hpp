#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "examkit/itemgen/question.hpp"

namespace examkit::itemgen {

struct PromptTemplates {
  std::string generator;
  std::string judge;
  std::string final_judge;

  // Built-in copies of templates/*.txt.
  static const PromptTemplates& defaults();
  // Loads generator_prompt.txt, judge_prompt.txt, final_judge_prompt.txt.
  static PromptTemplates load_dir(const std::filesystem::path& dir);
};

// One rendered few-shot block: kind is "GOOD"/"BAD"/"CALIBRATION",
// number is 1-based within its kind.
std::string render_example_block(const std::string& kind, int number,
                                 const Question& q, const char* decision);

// Options joined with " | " for single-line prompt rendering.
std::string render_options(const Question& q);

// Renders the generator template. At most the first five good and first
// five bad questions are included; calibration must hold exactly five
// exemplars. Byte-deterministic.
std::string build_generator_prompt(const CourseContext& context,
                                   const std::vector<Question>& good,
                                   const std::vector<Question>& bad,
                                   const std::vector<Question>& calibration,
                                   const PromptTemplates& templates =
                                       PromptTemplates::defaults());

std::string build_judge_prompt(const CourseContext& context,
                               const Question& candidate,
                               const std::vector<Question>& good,
                               const std::vector<Question>& bad,
                               const std::vector<Question>& calibration,
                               const PromptTemplates& templates =
                                   PromptTemplates::defaults());

std::string build_final_judge_prompt(const CourseContext& context,
                                     const Question& candidate,
                                     const PromptTemplates& templates =
                                         PromptTemplates::defaults());

}  // namespace examkit::itemgen
