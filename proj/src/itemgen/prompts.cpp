#include "examkit/itemgen/prompts.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "examkit/errors.hpp"

namespace examkit::itemgen {
namespace {

// Generated from templates/*.txt at configure time so the built-in
// defaults cannot drift from the files on disk.
const char kGeneratorTemplate[] =
#include "generator_prompt.inc"
    ;
const char kJudgeTemplate[] =
#include "judge_prompt.inc"
    ;
const char kFinalJudgeTemplate[] =
#include "final_judge_prompt.inc"
    ;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Single pass: a value is never rescanned, so question text containing
// brace tokens passes through untouched. Unknown tokens stay literal.
std::string replace_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::map<std::string, std::string> course_fields(const CourseContext& c) {
  return {{"course_name", c.course_name},
          {"desc", c.description},
          {"exam_content", c.exam_content},
          {"syllabus_content", c.syllabus_content}};
}

std::string render_blocks(const std::vector<Question>& good,
                          const std::vector<Question>& bad,
                          std::size_t window) {
  std::string out;
  std::size_t n_good = std::min(window, good.size());
  std::size_t n_bad = std::min(window, bad.size());
  for (std::size_t i = 0; i < n_good; ++i) {
    if (!out.empty()) out += "\n\n";
    out += render_example_block("GOOD", static_cast<int>(i) + 1, good[i], "KEEP");
  }
  for (std::size_t i = 0; i < n_bad; ++i) {
    if (!out.empty()) out += "\n\n";
    out += render_example_block("BAD", static_cast<int>(i) + 1, bad[i], "REMOVE");
  }
  return out;
}

std::string render_calibration(const std::vector<Question>& calibration) {
  require(calibration.size() == 5, ErrorCode::InvalidArgument,
          "calibration must hold exactly 5 exemplar questions, got " +
              std::to_string(calibration.size()));
  std::string out;
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    if (!out.empty()) out += "\n\n";
    out += render_example_block("CALIBRATION", static_cast<int>(i) + 1,
                                calibration[i], nullptr);
  }
  return out;
}

}  // namespace

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates t{kGeneratorTemplate, kJudgeTemplate,
                                 kFinalJudgeTemplate};
  return t;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
  PromptTemplates t;
  t.generator = read_file(dir / "generator_prompt.txt");
  t.judge = read_file(dir / "judge_prompt.txt");
  t.final_judge = read_file(dir / "final_judge_prompt.txt");
  return t;
}

std::string render_options(const Question& q) {
  std::string out;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (i) out += " | ";
    out += q.options[i];
  }
  return out;
}

std::string render_example_block(const std::string& kind, int number,
                                 const Question& q, const char* decision) {
  std::string out = kind + " EXAMPLE #" + std::to_string(number) + ":\n";
  out += "QUESTION: " + q.question + "\n";
  out += "OPTIONS: " + render_options(q);
  if (decision) {
    out += "\nDECISION: ";
    out += decision;
  } else {
    out += "\nANSWER: " + q.answer;
  }
  return out;
}

std::string build_generator_prompt(const CourseContext& context,
                                   const std::vector<Question>& good,
                                   const std::vector<Question>& bad,
                                   const std::vector<Question>& calibration,
                                   const PromptTemplates& templates) {
  context.validate();
  auto values = course_fields(context);
  values["calibration_examples"] = render_calibration(calibration);
  values["past_judge_decisions"] = render_blocks(good, bad, 5);
  return replace_placeholders(templates.generator, values);
}

std::string build_judge_prompt(const CourseContext& context,
                               const Question& candidate,
                               const std::vector<Question>& good,
                               const std::vector<Question>& bad,
                               const std::vector<Question>& calibration,
                               const PromptTemplates& templates) {
  context.validate();
  auto values = course_fields(context);
  values["course_info"] = "";
  values["past_examples"] = render_blocks(good, bad, 5);
  values["calibration_examples"] = render_calibration(calibration);
  values["question"] = candidate.question;
  values["options"] = render_options(candidate);
  return replace_placeholders(templates.judge, values);
}

std::string build_final_judge_prompt(const CourseContext& context,
                                     const Question& candidate,
                                     const PromptTemplates& templates) {
  context.validate();
  auto values = course_fields(context);
  values["question"] = candidate.question;
  values["options"] = render_options(candidate);
  values["answer"] = candidate.answer;
  return replace_placeholders(templates.final_judge, values);
}

}  // namespace examkit::itemgen
