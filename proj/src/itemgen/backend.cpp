#include "examkit/itemgen/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"
#include "json.hpp"

#include "examkit/errors.hpp"
#include "examkit/itemgen/question.hpp"

namespace examkit::itemgen {
namespace {

using nlohmann::json;

// Fragments that identify which template produced a prompt.
constexpr const char* kJudgeMarker = "Decide if we KEEP or REMOVE the question:";
constexpr const char* kFinalMarker = "You are performing a final review";

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies)
    : replies_(replies.begin(), replies.end()) {}

std::string ScriptedBackend::complete(const std::string& prompt) {
  ++calls_;
  prompts_.push_back(prompt);
  require(!replies_.empty(), ErrorCode::Backend,
          "scripted backend exhausted after " + std::to_string(calls_ - 1) +
              " replies");
  std::string reply = std::move(replies_.front());
  replies_.pop_front();
  return reply;
}

MockBackend::MockBackend(Script script) : script_(std::move(script)) {}

std::string MockBackend::complete(const std::string& prompt) {
  if (prompt.find(kFinalMarker) != std::string::npos) {
    FinalReply r;
    if (!script_.final_replies.empty()) {
      std::size_t idx = std::min(static_cast<std::size_t>(final_calls_),
                                 script_.final_replies.size() - 1);
      r = script_.final_replies[idx];
    } else {
      r.difficulty = 10 - final_calls_ % 10;
    }
    ++final_calls_;
    json j;
    j["is_appropriate"] = r.is_appropriate;
    j["answer_confirmed"] = r.answer_confirmed;
    j["difficulty"] = r.difficulty;
    return j.dump();
  }
  if (prompt.find(kJudgeMarker) != std::string::npos) {
    std::string verdict = "Keep";
    if (!script_.refine_verdicts.empty())
      verdict =
          script_.refine_verdicts[judge_calls_ % script_.refine_verdicts.size()];
    ++judge_calls_;
    return verdict;
  }
  ++generate_calls_;
  int n = generate_calls_;
  Question q;
  q.question = "Which statement about concept_" + std::to_string(n) +
               " holds in every case?";
  q.options = {"It preserves property A", "It preserves property B",
               "It preserves property C", "It preserves property D"};
  q.answer = q.options[0];
  q.explanation = "Property A follows directly from the definition.";
  q.relevant_courses = {"course_1"};
  q.difficulty = script_.generated_difficulty;
  q.key_concepts = {"concept_" + std::to_string(n)};
  q.question_type = "conceptual";
  q.quality = 5;
  return question_to_json(q).dump();
}

ReplayBackend::ReplayBackend(const std::filesystem::path& cache_file) {
  std::ifstream is(cache_file);
  require(bool(is), ErrorCode::Io, "cannot open " + cache_file.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw_error(ErrorCode::Parse,
                "bad replay cache " + cache_file.string() + ": " + e.what());
  }
  require(j.is_array(), ErrorCode::Parse,
          "replay cache must be an array of {prompt, reply} objects");
  for (const auto& e : j) {
    require(e.is_object() && e.contains("prompt") && e.contains("reply"),
            ErrorCode::Parse, "replay cache entry lacks prompt/reply");
    replies_[e["prompt"].get<std::string>()].push_back(
        e["reply"].get<std::string>());
  }
}

std::string ReplayBackend::complete(const std::string& prompt) {
  auto it = replies_.find(prompt);
  require(it != replies_.end() && !it->second.empty(), ErrorCode::Backend,
          "replay cache has no remaining reply for this prompt");
  std::string reply = std::move(it->second.front());
  it->second.pop_front();
  return reply;
}

RecordingBackend::RecordingBackend(std::unique_ptr<LlmBackend> inner,
                                   const std::filesystem::path& cache_file)
    : inner_(std::move(inner)), cache_file_(cache_file) {
  require(inner_ != nullptr, ErrorCode::InvalidArgument,
          "recording backend needs an inner backend");
}

RecordingBackend::~RecordingBackend() = default;

std::string RecordingBackend::complete(const std::string& prompt) {
  std::string reply = inner_->complete(prompt);
  log_.emplace_back(prompt, reply);
  flush();
  return reply;
}

std::string RecordingBackend::name() const {
  return inner_->name() + "+recording";
}

void RecordingBackend::flush() const {
  json j = json::array();
  for (const auto& [prompt, reply] : log_) {
    json e;
    e["prompt"] = prompt;
    e["reply"] = reply;
    j.push_back(std::move(e));
  }
  if (cache_file_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(cache_file_.parent_path(), ec);
  }
  std::ofstream os(cache_file_);
  require(bool(os), ErrorCode::Io, "cannot open " + cache_file_.string());
  os << j.dump(2) << '\n';
  os.flush();
  require(bool(os), ErrorCode::Io, "write failed for " + cache_file_.string());
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  require(!config_.base_url.empty(), ErrorCode::InvalidArgument,
          "http backend needs a base URL");
  require(!config_.model.empty(), ErrorCode::InvalidArgument,
          "http backend needs a model name");
  require(config_.max_attempts >= 1, ErrorCode::InvalidArgument,
          "max_attempts must be >= 1");
}

std::string HttpBackend::complete(const std::string& prompt) {
  json body;
  body["model"] = config_.model;
  body["messages"] =
      json::array({json{{"role", "user"}, {"content", prompt}}});
  if (config_.send_temperature) body["temperature"] = config_.temperature;
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "server returned status " + std::to_string(res->status);
      continue;
    }
    require(res->status >= 200 && res->status < 300, ErrorCode::Backend,
            "backend rejected request with status " +
                std::to_string(res->status) + ": " + res->body);
    try {
      json j = json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception& e) {
      throw_error(ErrorCode::Backend,
                  std::string("malformed completion response: ") + e.what());
    }
  }
  throw_error(ErrorCode::Backend,
              "backend unreachable after " +
                  std::to_string(config_.max_attempts) + " attempts: " +
                  last_error);
}

}  // namespace examkit::itemgen
