// Standalone deterministic step generator for exercising the remote proposer.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cpl/genadapter.hpp"

namespace {
std::atomic<bool> stop_requested{false};
}

int main(int argc, char** argv) {
  CLI::App app{"Deterministic mock step generator"};
  int port = 0;
  cpl::MockOptions opts;
  bool no_logprobs = false;
  app.add_option("--port", port, "Port to listen on (0 picks one)");
  app.add_flag("--no-logprobs", no_logprobs, "Omit log-probabilities from responses");
  app.add_option("--delay-ms", opts.delay_ms, "Delay before each response");
  CLI11_PARSE(app, argc, argv);
  opts.include_logprobs = !no_logprobs;

  cpl::MockGenServer server(opts);
  try {
    server.start(port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << server.endpoint() << std::endl;

  std::signal(SIGINT, [](int) { stop_requested = true; });
  std::signal(SIGTERM, [](int) { stop_requested = true; });
  while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}
