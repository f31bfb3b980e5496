#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "cpl/error.hpp"
#include "cpl/genadapter.hpp"

namespace cpl {

namespace {

constexpr std::size_t kExcerptLength = 200;

std::string excerpt(const std::string& body) {
  return body.size() <= kExcerptLength ? body : body.substr(0, kExcerptLength) + "...";
}

/// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos || endpoint.compare(0, scheme, "http") != 0) {
    throw ConfigError("endpoint must look like http://host:port/path, got '" + endpoint + "'");
  }
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

void set_timeouts(httplib::Client& cli, double timeout_s) {
  const auto us = std::chrono::microseconds(static_cast<std::int64_t>(timeout_s * 1e6));
  cli.set_connection_timeout(us);
  cli.set_read_timeout(us);
  cli.set_write_timeout(us);
}

const char* getenv_nonempty(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

}  // namespace

void GenRequest::validate() const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

Json GenRequest::to_json() const {
  return Json{{"state", state}, {"k", k}, {"temperature", temperature},
              {"kind", kind == StepKind::Plan ? "plan" : "solution"}};
}

GenRequest GenRequest::from_json(const Json& j) {
  GenRequest r;
  r.state = j.at("state").get<std::string>();
  r.k = j.at("k").get<int>();
  r.temperature = j.at("temperature").get<double>();
  r.kind = parse_step_kind(j.at("kind").get<std::string>());
  return r;
}

Json GenResponse::to_json() const {
  Json j{{"proposals", proposals}};
  if (logprobs) j["logprobs"] = *logprobs;
  return j;
}

GenResponse parse_gen_response(const std::string& body, int k) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    throw ProtocolError("response is not JSON: " + excerpt(body));
  }
  if (!j.is_object() || !j.contains("proposals") || !j["proposals"].is_array()) {
    throw ProtocolError("response lacks a proposals array: " + excerpt(body));
  }
  std::vector<std::string> raw;
  for (const auto& p : j["proposals"]) {
    if (!p.is_string()) throw ProtocolError("proposal is not a string: " + excerpt(body));
    raw.push_back(p.get<std::string>());
  }
  std::optional<std::vector<double>> raw_lp;
  if (j.contains("logprobs") && !j["logprobs"].is_null()) {
    if (!j["logprobs"].is_array() || j["logprobs"].size() != raw.size()) {
      throw ProtocolError("logprobs must align with proposals: " + excerpt(body));
    }
    raw_lp.emplace();
    for (const auto& v : j["logprobs"]) {
      if (!v.is_number()) throw ProtocolError("logprob is not a number: " + excerpt(body));
      raw_lp->push_back(v.get<double>());
    }
  }

  GenResponse out;
  if (raw_lp) out.logprobs.emplace();
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < raw.size() && out.proposals.size() < static_cast<std::size_t>(k); ++i) {
    if (raw[i].empty() || !seen.insert(raw[i]).second) continue;
    out.proposals.push_back(raw[i]);
    if (raw_lp) out.logprobs->push_back((*raw_lp)[i]);
  }
  if (out.proposals.empty()) throw ProtocolError("response has no usable proposals: " + excerpt(body));
  return out;
}

ClientConfig ClientConfig::with_env_overrides() const {
  ClientConfig c = *this;
  try {
    if (const char* v = getenv_nonempty("CPL_GEN_ENDPOINT")) c.endpoint = v;
    if (const char* v = getenv_nonempty("CPL_GEN_TIMEOUT")) c.timeout_s = std::stod(v);
    if (const char* v = getenv_nonempty("CPL_GEN_RETRIES")) c.retries = std::stoi(v);
    if (const char* v = getenv_nonempty("CPL_GEN_MAX_INFLIGHT")) c.max_in_flight = std::stoul(v);
  } catch (const std::logic_error&) {
    throw ConfigError("malformed CPL_GEN_* environment variable");
  }
  if (const char* v = getenv_nonempty("CPL_GEN_TOKEN")) c.bearer_token = v;
  return c;
}

GenClient::GenClient(ClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.retries < 0) throw ConfigError("retries must be non-negative");
  if (cfg_.max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (!(cfg_.timeout_s > 0.0)) throw ConfigError("timeout must be positive");
  std::tie(host_, path_) = split_endpoint(cfg_.endpoint);
}

GenResponse GenClient::propose(const GenRequest& req) const {
  req.validate();
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    const GenClient* c;
    ~Release() {
      {
        std::lock_guard lock(c->mu_);
        --c->in_flight_;
      }
      c->cv_.notify_one();
    }
  } release{this};

  httplib::Client cli(host_);
  set_timeouts(cli, cfg_.timeout_s);
  if (!cfg_.bearer_token.empty()) cli.set_bearer_token_auth(cfg_.bearer_token);
  const std::string body = req.to_json().dump();

  std::string last_error;
  double backoff = cfg_.backoff_s;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    auto res = cli.Post(path_, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
    }
    return parse_gen_response(res->body, req.k);
  }
  throw UnavailableError(cfg_.endpoint + " unavailable after " + std::to_string(cfg_.retries + 1) +
                         " attempts: " + last_error);
}

GenResponse propose_steps(const ClientConfig& cfg, const GenRequest& req) { return GenClient(cfg).propose(req); }

bool health_check(const std::string& endpoint, double timeout_s) {
  try {
    auto [host, path] = split_endpoint(endpoint);
    httplib::Client cli(host);
    set_timeouts(cli, timeout_s);
    GenRequest noop;
    auto res = cli.Post(path, noop.to_json().dump(), "application/json");
    return res && res->status >= 200 && res->status < 300;
  } catch (...) {
    return false;
  }
}

}  // namespace cpl
