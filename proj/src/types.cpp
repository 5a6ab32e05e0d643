#include "examkit/types.hpp"

#include <cmath>
#include <set>

#include "examkit/errors.hpp"

namespace examkit {

std::string to_string(ExamKind kind) {
  switch (kind) {
    case ExamKind::PreTest: return "pre_test";
    case ExamKind::AiGenerated: return "ai_generated";
    case ExamKind::Standardized: return "standardized";
  }
  return "unknown";
}

std::optional<ExamKind> parse_exam_kind(const std::string& text) {
  if (text == "pre_test") return ExamKind::PreTest;
  if (text == "ai_generated") return ExamKind::AiGenerated;
  if (text == "standardized") return ExamKind::Standardized;
  return std::nullopt;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::DataIntegrity: return "data-integrity";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::SamplerInit: return "sampler-init";
    case ErrorCode::Backend: return "backend";
    case ErrorCode::GenerationFailure: return "generation-failure";
    case ErrorCode::JudgingFailure: return "judging-failure";
    case ErrorCode::LoopExhaustion: return "loop-exhaustion";
    case ErrorCode::AssemblyFailure: return "assembly-failure";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

std::vector<std::int32_t> ResponseMatrix::items_of_kind(ExamKind kind) const {
  std::vector<std::int32_t> out;
  for (std::size_t j = 0; j < item_kind.size(); ++j) {
    if (item_kind[j] == kind) out.push_back(static_cast<std::int32_t>(j));
  }
  return out;
}

void ResponseMatrix::validate() const {
  require(item_kind.size() == item_ids.size(), ErrorCode::InvalidArgument,
          "item_kind size does not match item count");
  std::set<std::pair<std::int32_t, std::int32_t>> seen;
  for (const Response& r : responses) {
    require(r.student >= 0 && static_cast<std::size_t>(r.student) < n_students(),
            ErrorCode::InvalidArgument, "student index out of range");
    require(r.item >= 0 && static_cast<std::size_t>(r.item) < n_items(),
            ErrorCode::InvalidArgument, "item index out of range");
    require(r.correct == 0 || r.correct == 1, ErrorCode::InvalidArgument,
            "correct must be 0 or 1");
    require(seen.emplace(r.student, r.item).second, ErrorCode::InvalidArgument,
            "duplicate (student,item) cell");
  }
}

bool ModelParameters::all_finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  for (double v : theta)
    if (!ok(v)) return false;
  for (double v : log_alpha)
    if (!ok(v)) return false;
  for (double v : beta)
    if (!ok(v)) return false;
  return ok(mu_alpha) && ok(mu_beta) && ok(log_sigma_alpha) && ok(log_sigma_beta);
}

}  // namespace examkit
