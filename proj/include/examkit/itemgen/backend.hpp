#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace examkit::itemgen {

// Synchronous text-completion contract every pipeline stage talks to.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  // Throws Error(Backend) on transport or protocol failure.
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

// Fixed reply queue, used for parser behavior tests. Exhaustion throws.
class ScriptedBackend : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies);
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "scripted"; }
  int calls() const { return calls_; }
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::deque<std::string> replies_;
  std::vector<std::string> prompts_;
  int calls_ = 0;
};

// Deterministic whole-pipeline stand-in. Classifies each prompt as a
// generation, refine-judge, or final-judge request from template markers
// and answers from its script.
class MockBackend : public LlmBackend {
 public:
  struct FinalReply {
    bool is_appropriate = true;
    bool answer_confirmed = true;
    int difficulty = 5;
  };
  struct Script {
    // Refine verdicts consumed in order; when exhausted the pattern
    // repeats from the start. Empty means keep everything.
    std::vector<std::string> refine_verdicts;
    // Final-judge replies consumed in order; when exhausted the last
    // entry repeats. Empty means approve with difficulty cycling 10..1.
    std::vector<FinalReply> final_replies;
    // Self-reported difficulty for generated questions.
    int generated_difficulty = 5;
  };

  explicit MockBackend(Script script);
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "mock"; }

  int generate_calls() const { return generate_calls_; }
  int judge_calls() const { return judge_calls_; }
  int final_calls() const { return final_calls_; }

 private:
  Script script_;
  int generate_calls_ = 0;
  int judge_calls_ = 0;
  int final_calls_ = 0;
};

// Replays recorded prompt->reply pairs; a prompt with no remaining
// recorded reply is a backend error.
class ReplayBackend : public LlmBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& cache_file);
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "replay"; }

 private:
  std::map<std::string, std::deque<std::string>> replies_;
};

// Wraps another backend and appends every exchange to a replay cache.
class RecordingBackend : public LlmBackend {
 public:
  RecordingBackend(std::unique_ptr<LlmBackend> inner,
                   const std::filesystem::path& cache_file);
  ~RecordingBackend() override;
  std::string complete(const std::string& prompt) override;
  std::string name() const override;

 private:
  void flush() const;
  std::unique_ptr<LlmBackend> inner_;
  std::filesystem::path cache_file_;
  std::vector<std::pair<std::string, std::string>> log_;
};

struct HttpBackendConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  // Name of the environment variable holding the bearer token; empty
  // sends no Authorization header.
  std::string token_env = "EXAMKIT_API_TOKEN";
  double temperature = 1.0;
  bool send_temperature = false;
  int max_attempts = 3;
  int backoff_ms = 250;  // doubled per retry
  int timeout_s = 120;
};

// Chat-completions client: one user message per request, returns the
// first choice's message content.
class HttpBackend : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "http"; }

 private:
  HttpBackendConfig config_;
};

}  // namespace examkit::itemgen
