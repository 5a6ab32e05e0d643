#include "examkit/itemgen/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace examkit::itemgen {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Scans for a '{' and tries progressively to parse a balanced object,
// honoring strings and escapes so braces in text do not confuse it.
std::optional<std::string> first_balanced_object(const std::string& text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (c == '\\')
          ++i;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        --depth;
        if (depth == 0) return text.substr(start, i - start + 1);
      }
    }
  }
  return std::nullopt;
}

// The refine loop shares pools and the generation counter across top-up
// rounds, so the real worker takes them by reference.
void refine_until(LlmBackend& backend, const CourseContext& context,
                  const PipelineConfig& config, int target_good_total,
                  int topup_round, std::vector<GeneratedQuestion>& good,
                  std::vector<GeneratedQuestion>& bad, int& generated_total) {
  auto window = [](const std::vector<GeneratedQuestion>& pool) {
    std::vector<Question> qs;
    qs.reserve(pool.size());
    for (const auto& g : pool) qs.push_back(g.question);
    return qs;
  };

  while (static_cast<int>(good.size()) < target_good_total) {
    if (generated_total >= config.max_iterations) {
      RefineResult partial{good, bad, generated_total};
      throw LoopExhaustionError(
          "refine loop exhausted " + std::to_string(config.max_iterations) +
              " generations with " + std::to_string(good.size()) + " of " +
              std::to_string(target_good_total) + " good questions",
          std::move(partial));
    }
    std::string prompt = build_generator_prompt(
        context, window(good), window(bad), config.calibration,
        config.templates);
    GeneratedQuestion gq;
    gq.question = generate_question(backend, prompt, config.parse_retries);
    gq.provenance.id = generated_total++;
    gq.provenance.topup_round = topup_round;

    try {
      JudgeVerdict verdict =
          judge_question(backend, context, gq.question, window(good),
                         window(bad), config.calibration, config.templates,
                         config.parse_retries);
      gq.provenance.refine_label = verdict.label;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::JudgingFailure) throw;
      // An unusable verdict must never leak a question into the exam.
      gq.provenance.refine_label = JudgeLabel::Remove;
      gq.provenance.judge_failed = true;
    }
    if (gq.provenance.refine_label == JudgeLabel::Keep)
      good.push_back(std::move(gq));
    else
      bad.push_back(std::move(gq));
  }
}

FinalAssessment parse_final_assessment(const std::string& reply,
                                       const Question& question) {
  auto j = extract_first_json_object(reply);
  require(j.has_value(), ErrorCode::Parse, "final judge reply has no JSON");
  require(j->contains("is_appropriate") && (*j)["is_appropriate"].is_boolean(),
          ErrorCode::Parse, "final judge reply lacks boolean is_appropriate");
  require(j->contains("answer_confirmed") &&
              (*j)["answer_confirmed"].is_boolean(),
          ErrorCode::Parse, "final judge reply lacks boolean answer_confirmed");
  require(j->contains("difficulty") && (*j)["difficulty"].is_number_integer(),
          ErrorCode::Parse, "final judge reply lacks integer difficulty");
  int difficulty = (*j)["difficulty"].get<int>();
  require(difficulty >= 1 && difficulty <= 10, ErrorCode::Parse,
          "final judge difficulty outside [1,10]");
  FinalAssessment a;
  a.question = question;
  a.is_appropriate = (*j)["is_appropriate"].get<bool>();
  a.answer_confirmed = (*j)["answer_confirmed"].get<bool>();
  a.judged_difficulty = difficulty;
  return a;
}

}  // namespace

void PipelineConfig::validate() const {
  require(target_good >= 1, ErrorCode::InvalidArgument,
          "target_good must be >= 1");
  require(exam_size >= 1, ErrorCode::InvalidArgument, "exam_size must be >= 1");
  require(max_iterations >= 1, ErrorCode::InvalidArgument,
          "max_iterations must be >= 1");
  require(parse_retries >= 1, ErrorCode::InvalidArgument,
          "parse_retries must be >= 1");
  require(max_topup_rounds >= 0, ErrorCode::InvalidArgument,
          "max_topup_rounds must be >= 0");
  require(topup_batch >= 1, ErrorCode::InvalidArgument,
          "topup_batch must be >= 1");
  require(calibration.size() == 5, ErrorCode::InvalidArgument,
          "calibration must hold exactly 5 exemplar questions");
}

std::optional<json> extract_first_json_object(const std::string& text) {
  // Try progressively later '{' starts until one parses.
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t brace = text.find('{', offset);
    if (brace == std::string::npos) return std::nullopt;
    auto candidate = first_balanced_object(text.substr(brace));
    if (!candidate) return std::nullopt;
    json parsed = json::parse(*candidate, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    offset = brace + 1;
  }
  return std::nullopt;
}

Question generate_question(LlmBackend& backend, const std::string& prompt,
                           int retries) {
  require(retries >= 1, ErrorCode::InvalidArgument, "retries must be >= 1");
  std::string last_reply;
  std::string last_error;
  for (int attempt = 0; attempt < retries; ++attempt) {
    last_reply = backend.complete(prompt);
    auto j = extract_first_json_object(last_reply);
    if (!j) {
      last_error = "no JSON object in reply";
      continue;
    }
    try {
      return question_from_json(*j);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw_error(ErrorCode::GenerationFailure,
              "no valid question after " + std::to_string(retries) +
                  " attempts (" + last_error + "); last reply: " + last_reply);
}

JudgeVerdict judge_question(LlmBackend& backend, const CourseContext& context,
                            const Question& question,
                            const std::vector<Question>& good,
                            const std::vector<Question>& bad,
                            const std::vector<Question>& calibration,
                            const PromptTemplates& templates, int retries) {
  require(retries >= 1, ErrorCode::InvalidArgument, "retries must be >= 1");
  std::string prompt = build_judge_prompt(context, question, good, bad,
                                          calibration, templates);
  std::string last_reply;
  for (int attempt = 0; attempt < retries; ++attempt) {
    last_reply = backend.complete(prompt);
    std::string norm = lower(trim(last_reply));
    if (norm == "keep") return {JudgeLabel::Keep, last_reply};
    if (norm == "remove") return {JudgeLabel::Remove, last_reply};
  }
  throw_error(ErrorCode::JudgingFailure,
              "no usable verdict after " + std::to_string(retries) +
                  " attempts; last reply: " + last_reply);
}

RefineResult refine_loop(LlmBackend& backend, const CourseContext& context,
                         const PipelineConfig& config) {
  config.validate();
  context.validate();
  RefineResult out;
  int generated = 0;
  refine_until(backend, context, config, config.target_good, 0, out.good,
               out.bad, generated);
  out.total_generated = generated;
  return out;
}

std::vector<FinalAssessment> final_judging(LlmBackend& backend,
                                           const CourseContext& context,
                                           const std::vector<Question>& questions,
                                           const PipelineConfig& config) {
  require(!questions.empty(), ErrorCode::InvalidArgument,
          "final judging needs at least one question");
  std::vector<FinalAssessment> out;
  out.reserve(questions.size());
  for (const auto& q : questions) {
    std::string prompt =
        build_final_judge_prompt(context, q, config.templates);
    std::string last_error;
    bool done = false;
    for (int attempt = 0; attempt < config.parse_retries && !done; ++attempt) {
      std::string reply = backend.complete(prompt);
      try {
        out.push_back(parse_final_assessment(reply, q));
        done = true;
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!done)
      throw_error(ErrorCode::JudgingFailure,
                  "final judging unparseable after " +
                      std::to_string(config.parse_retries) +
                      " attempts: " + last_error);
  }
  return out;
}

Exam assemble_exam(LlmBackend& backend, const CourseContext& context,
                   const PipelineConfig& config) {
  config.validate();
  context.validate();

  std::vector<GeneratedQuestion> good, bad;
  int generated = 0;
  refine_until(backend, context, config, config.target_good, 0, good, bad,
               generated);

  auto build_partial = [&](const std::vector<GeneratedQuestion*>& sel) {
    Exam exam;
    exam.course_name = context.course_name;
    for (const auto* g : sel) {
      exam.questions.push_back(g->question);
      exam.question_difficulty.push_back(g->provenance.judged_difficulty);
    }
    std::vector<const GeneratedQuestion*> pool;
    for (const auto& g : good) pool.push_back(&g);
    for (const auto& g : bad) pool.push_back(&g);
    std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) {
      return a->provenance.id < b->provenance.id;
    });
    for (const auto* g : pool) exam.provenance.push_back(g->provenance);
    return exam;
  };

  std::vector<GeneratedQuestion*> approved;
  for (int round = 0;; ++round) {
    // The whole good pool is re-judged each round, fresh assessments
    // replacing any earlier ones.
    std::vector<Question> pool;
    pool.reserve(good.size());
    for (const auto& g : good) pool.push_back(g.question);
    auto assessments = final_judging(backend, context, pool, config);
    approved.clear();
    for (std::size_t i = 0; i < good.size(); ++i) {
      good[i].provenance.assessed = true;
      good[i].provenance.approved = assessments[i].approved();
      good[i].provenance.judged_difficulty = assessments[i].judged_difficulty;
      good[i].provenance.exam_rank = -1;
      if (assessments[i].approved()) approved.push_back(&good[i]);
    }
    if (static_cast<int>(approved.size()) >= config.exam_size) break;
    if (round >= config.max_topup_rounds) {
      std::stable_sort(approved.begin(), approved.end(), [](auto* a, auto* b) {
        if (a->provenance.judged_difficulty != b->provenance.judged_difficulty)
          return a->provenance.judged_difficulty > b->provenance.judged_difficulty;
        return a->provenance.id < b->provenance.id;
      });
      for (std::size_t r = 0; r < approved.size(); ++r)
        approved[r]->provenance.exam_rank = static_cast<int>(r);
      throw AssemblyFailureError(
          "only " + std::to_string(approved.size()) + " of " +
              std::to_string(config.exam_size) + " questions approved after " +
              std::to_string(config.max_topup_rounds) + " top-up rounds",
          build_partial(approved));
    }
    refine_until(backend, context, config,
                 static_cast<int>(good.size()) + config.topup_batch, round + 1,
                 good, bad, generated);
  }

  std::stable_sort(approved.begin(), approved.end(), [](auto* a, auto* b) {
    if (a->provenance.judged_difficulty != b->provenance.judged_difficulty)
      return a->provenance.judged_difficulty > b->provenance.judged_difficulty;
    return a->provenance.id < b->provenance.id;
  });
  approved.resize(config.exam_size);
  for (std::size_t r = 0; r < approved.size(); ++r)
    approved[r]->provenance.exam_rank = static_cast<int>(r);
  return build_partial(approved);
}

Exam select_benchmark(const std::vector<Question>& bank,
                      const std::vector<std::string>& course_concepts,
                      const std::string& course_name, int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(static_cast<int>(bank.size()) >= n, ErrorCode::InvalidArgument,
          "bank holds " + std::to_string(bank.size()) +
              " questions, need at least " + std::to_string(n));

  std::set<std::string> course;
  for (const auto& c : course_concepts) course.insert(lower(trim(c)));

  // Bank order: difficulty descending, original index ascending.
  std::vector<std::size_t> order(bank.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bank[a].difficulty > bank[b].difficulty;
  });

  auto concepts_of = [&](std::size_t i) {
    std::set<std::string> s;
    for (const auto& c : bank[i].key_concepts) s.insert(lower(trim(c)));
    return s;
  };

  std::vector<std::size_t> chosen;
  std::set<std::size_t> used;
  std::set<std::string> covered;
  // Pass 1 enforces course fit and concept novelty, pass 2 drops
  // novelty, pass 3 admits anything left.
  for (int pass = 0; pass < 3 && static_cast<int>(chosen.size()) < n; ++pass) {
    for (std::size_t idx : order) {
      if (static_cast<int>(chosen.size()) >= n) break;
      if (used.count(idx)) continue;
      auto cs = concepts_of(idx);
      bool fits = false, novel = false;
      for (const auto& c : cs) {
        if (course.count(c)) fits = true;
        if (!covered.count(c)) novel = true;
      }
      if (pass == 0 && !(fits && novel)) continue;
      if (pass == 1 && !fits) continue;
      chosen.push_back(idx);
      used.insert(idx);
      covered.insert(cs.begin(), cs.end());
    }
  }

  Exam exam;
  exam.course_name = course_name;
  for (std::size_t idx : chosen) {
    exam.questions.push_back(bank[idx]);
    exam.question_difficulty.push_back(bank[idx].difficulty);
    Provenance p;
    p.id = static_cast<int>(idx);
    p.assessed = true;
    p.approved = true;
    p.judged_difficulty = bank[idx].difficulty;
    p.exam_rank = static_cast<int>(exam.questions.size()) - 1;
    exam.provenance.push_back(p);
  }
  return exam;
}

}  // namespace examkit::itemgen
