#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "cpl/env.hpp"
#include "cpl/json_io.hpp"
#include "cpl/mcts.hpp"

namespace cpl {

struct GenRequest {
  std::string state;  // problem statement plus the trace so far
  int k = 1;
  double temperature = 1.0;
  StepKind kind = StepKind::Plan;

  /// Throws ConfigError unless k >= 1 and temperature > 0.
  void validate() const;
  Json to_json() const;
  static GenRequest from_json(const Json& j);
};

struct GenResponse {
  std::vector<std::string> proposals;  // deduplicated, first occurrence kept
  std::optional<std::vector<double>> logprobs;

  Json to_json() const;
};

/// Parses and deduplicates a response body. A logprobs array, when present,
/// must align with the raw proposals. Throws ProtocolError with a body excerpt.
GenResponse parse_gen_response(const std::string& body, int k);

struct ClientConfig {
  std::string endpoint;  // http://host:port/path
  double timeout_s = 5.0;
  int retries = 2;
  double backoff_s = 0.05;  // doubles after each failed attempt
  std::string bearer_token;
  std::size_t max_in_flight = 4;

  /// Overrides fields from CPL_GEN_ENDPOINT, CPL_GEN_TIMEOUT, CPL_GEN_RETRIES,
  /// CPL_GEN_MAX_INFLIGHT and CPL_GEN_TOKEN when they are set.
  ClientConfig with_env_overrides() const;
};

/// Thread-safe; concurrent calls beyond max_in_flight block until a slot frees.
class GenClient {
 public:
  explicit GenClient(ClientConfig cfg);

  /// Retries connection failures, timeouts, 429 and 5xx responses with
  /// exponential backoff. Throws UnavailableError once retries are exhausted,
  /// ProtocolError on other 4xx statuses or malformed bodies.
  GenResponse propose(const GenRequest& req) const;

  const ClientConfig& config() const { return cfg_; }

 private:
  ClientConfig cfg_;
  std::string host_;  // scheme://host:port
  std::string path_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable std::size_t in_flight_ = 0;
};

GenResponse propose_steps(const ClientConfig& cfg, const GenRequest& req);

/// True iff the endpoint answers a k=1 request with a 2xx status within the
/// timeout. Never throws.
bool health_check(const std::string& endpoint, double timeout_s);

inline constexpr const char* kDefaultAnswerPattern = R"(\\boxed\{\s*(-?[0-9]+)\s*\})";

/// Expansion from a remote generator. Proposals matching the answer pattern
/// become solution steps with the captured integer as payload; all others are
/// plan steps. Priors come from reported log-probabilities, else uniform.
class AdapterProposer final : public StepProposer {
 public:
  AdapterProposer(const Environment& env, const GenClient& client, const std::string& answer_pattern = kDefaultAnswerPattern);

  Expansion propose(const Problem& p, const State& s, std::size_t k, double temperature, Rng& rng) const override;

  /// The solution step encoded in `text`, if any.
  std::optional<StepAction> parse_answer(const std::string& text) const;

 private:
  const Environment& env_;
  const GenClient& client_;
  std::regex answer_;
};

// ---- Mock server -------------------------------------------------------------

struct MockOptions {
  bool include_logprobs = true;
  bool duplicate_proposals = false;  // repeat every proposal twice
  int fail_first = 0;                // answer this many requests with HTTP 500 first
  int delay_ms = 0;                  // sleep before answering
};

/// Deterministic proposals: a function of (state, k, kind) only.
GenResponse mock_proposals(const GenRequest& req, bool include_logprobs);

/// Local HTTP server speaking the generator protocol. Listens on 127.0.0.1.
class MockGenServer {
 public:
  using Handler = std::function<GenResponse(const GenRequest&)>;

  explicit MockGenServer(MockOptions opts = {}, Handler handler = {});
  ~MockGenServer();
  MockGenServer(const MockGenServer&) = delete;
  MockGenServer& operator=(const MockGenServer&) = delete;

  /// Binds to `port` (0 picks a free one) and serves on a background thread.
  void start(int port = 0);
  void stop();

  int port() const { return port_; }
  std::string endpoint() const;
  int requests_served() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace cpl
