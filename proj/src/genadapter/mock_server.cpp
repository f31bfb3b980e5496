#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "cpl/error.hpp"
#include "cpl/genadapter.hpp"
#include "cpl/hash.hpp"

namespace cpl {

GenResponse mock_proposals(const GenRequest& req, bool include_logprobs) {
  const std::uint64_t h = hash_combine(fnv1a64(req.state), req.kind == StepKind::Plan ? 1 : 2);
  GenResponse out;
  if (include_logprobs) out.logprobs.emplace();
  for (int i = 0; i < req.k; ++i) {
    const std::uint64_t r = mix64(h + static_cast<std::uint64_t>(i));
    // Plan requests still carry one answer so shallow paths can terminate.
    const bool answer = req.kind == StepKind::Solution || i == req.k - 1;
    out.proposals.push_back(answer ? "so the result is \\boxed{" + std::to_string(r % 40) + "}"
                                   : "work out part " + std::to_string(r % 9 + 1) + " next");
    if (include_logprobs) out.logprobs->push_back(-0.25 * static_cast<double>(r % 8));
  }
  return out;
}

struct MockGenServer::Impl {
  httplib::Server server;
  std::thread thread;
  MockOptions opts;
  Handler handler;
  std::atomic<int> served{0};
  std::atomic<int> failures_left{0};
};

MockGenServer::MockGenServer(MockOptions opts, Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->opts = opts;
  impl_->failures_left = opts.fail_first;
  impl_->handler = handler ? std::move(handler) : [include = opts.include_logprobs](const GenRequest& r) {
    return mock_proposals(r, include);
  };

  impl_->server.Post(".*", [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) {
    ++impl->served;
    if (impl->opts.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(impl->opts.delay_ms));
    if (impl->failures_left.fetch_sub(1) > 0) {
      res.status = 500;
      res.set_content(R"({"error":"injected failure"})", "application/json");
      return;
    }
    GenRequest gr;
    try {
      gr = GenRequest::from_json(Json::parse(req.body));
      gr.validate();
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    GenResponse out = impl->handler(gr);
    if (impl->opts.duplicate_proposals) {
      auto p = out.proposals;
      out.proposals.clear();
      for (const auto& s : p) out.proposals.insert(out.proposals.end(), {s, s});
      if (out.logprobs) {
        auto l = *out.logprobs;
        out.logprobs->clear();
        for (double v : l) out.logprobs->insert(out.logprobs->end(), {v, v});
      }
    }
    res.set_content(out.to_json().dump(), "application/json");
  });
}

MockGenServer::~MockGenServer() { stop(); }

void MockGenServer::start(int port) {
  if (impl_->thread.joinable()) throw PreconditionError("mock server already running");
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw Error("mock server could not bind");
  impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockGenServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

std::string MockGenServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/generate"; }

int MockGenServer::requests_served() const { return impl_->served.load(); }

}  // namespace cpl
