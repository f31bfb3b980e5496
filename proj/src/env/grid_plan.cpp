#include <algorithm>
#include <cstdlib>
#include <deque>
#include <sstream>

#include "cpl/env.hpp"
#include "cpl/error.hpp"
#include "cpl/hash.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

constexpr std::size_t kSolutionCandidates = 4;
constexpr std::string_view kNoopDisplay = "review the map";
constexpr double kObstacleDensity = 0.2;

/// BFS distances from `from`; -1 marks unreachable cells.
std::vector<int> distances(const GridSpec& g, Cell from) {
  std::vector<int> dist(static_cast<std::size_t>(g.rows * g.cols), -1);
  auto at = [&](Cell c) { return static_cast<std::size_t>(c.row * g.cols + c.col); };
  std::deque<Cell> queue{from};
  dist[at(from)] = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    constexpr int dr[] = {-1, 1, 0, 0};
    constexpr int dc[] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.row + dr[k], c.col + dc[k]};
      if (n.row < 0 || n.col < 0 || n.row >= g.rows || n.col >= g.cols) continue;
      if (g.blocked[at(n)] || dist[at(n)] >= 0) continue;
      dist[at(n)] = dist[at(c)] + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

int dist_between(const GridSpec& g, Cell a, Cell b) {
  return distances(g, a)[static_cast<std::size_t>(b.row * g.cols + b.col)];
}

std::string wname(std::int64_t j, std::size_t waypoints) {
  return j == static_cast<std::int64_t>(waypoints) ? "goal" : "w" + std::to_string(j + 1);
}

std::string go_display(std::int64_t j, std::size_t waypoints) { return "go to " + wname(j, waypoints) + " next"; }

std::string answer_display(std::int64_t v) { return "answer " + std::to_string(v); }

struct Route {
  std::vector<bool> visited;  // waypoints, plus the goal at the last slot
  Cell position;
  std::int64_t length = 0;  // sum of shortest leg lengths so far
};

Route replay(const GridSpec& g, const State& s) {
  Route r{std::vector<bool>(g.waypoints.size() + 1, false), g.start, 0};
  for (const auto& a : s.trace) {
    if (a.kind != StepKind::Plan || a.payload < 0 || a.payload > static_cast<std::int64_t>(g.waypoints.size())) {
      continue;
    }
    const auto j = static_cast<std::size_t>(a.payload);
    const Cell next = j == g.waypoints.size() ? g.goal : g.waypoints[j];
    r.length += dist_between(g, r.position, next);
    r.position = next;
    r.visited[j] = true;
  }
  return r;
}

}  // namespace

int GridPlanEnv::grid_size(Difficulty d) {
  switch (d) {
    case Difficulty::Easy:
      return 5;
    case Difficulty::Medium:
      return 7;
    case Difficulty::Hard:
      return 9;
    case Difficulty::Expert:
      return 11;
  }
  throw ConfigError("invalid difficulty");
}

std::vector<Problem> GridPlanEnv::generate(std::uint64_t seed, std::size_t n, Difficulty difficulty) const {
  if (n < 1) throw PreconditionError("generate requires n >= 1");
  const int size = grid_size(difficulty);
  std::vector<Problem> out;
  out.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    Rng rng(derive_seed(derive_seed(seed, "grid"), idx));
    for (;;) {
      GridSpec g;
      g.rows = g.cols = size;
      g.blocked.assign(static_cast<std::size_t>(size * size), 0);
      for (auto& b : g.blocked) b = rng.uniform() < kObstacleDensity ? 1 : 0;
      std::vector<Cell> open;
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          if (!g.blocked[static_cast<std::size_t>(r * size + c)]) open.push_back({r, c});
        }
      }
      if (open.size() < static_cast<std::size_t>(kWaypoints + 2)) continue;
      rng.shuffle(open);
      g.start = open[0];
      const auto from_start = distances(g, g.start);
      auto reach = [&](Cell c) { return from_start[static_cast<std::size_t>(c.row * size + c.col)]; };
      std::vector<Cell> reachable;
      for (std::size_t i = 1; i < open.size(); ++i) {
        if (reach(open[i]) > 0) reachable.push_back(open[i]);
      }
      if (reachable.size() < static_cast<std::size_t>(kWaypoints + 1)) continue;
      g.goal = reachable[0];
      if (reach(g.goal) < size - 1) continue;
      g.waypoints.assign(reachable.begin() + 1, reachable.begin() + 1 + kWaypoints);

      Problem p;
      p.id = "grid-" + std::to_string(seed) + "-" + std::to_string(idx);
      p.env = std::string(name());
      p.ground_truth = reach(g.goal);
      p.spec = std::move(g);
      out.push_back(std::move(p));
      break;
    }
  }
  return out;
}

std::vector<StepAction> GridPlanEnv::enumerate(const Problem& p, const State& s) const {
  const auto& g = std::get<GridSpec>(p.spec);
  const Route r = replay(g, s);
  const std::size_t m = g.waypoints.size();
  std::vector<StepAction> out;

  const bool at_goal = r.visited[m];
  if (!at_goal) {
    const auto to_goal = distances(g, g.goal);
    auto remaining = [&](Cell c) { return to_goal[static_cast<std::size_t>(c.row * g.cols + c.col)]; };
    const int here = remaining(r.position);
    for (std::size_t j = 0; j <= m; ++j) {
      if (r.visited[j]) continue;
      StepAction a{StepKind::Plan, static_cast<std::int64_t>(j), go_display(static_cast<std::int64_t>(j), m), {}};
      if (j == m) {
        a.tags.emplace_back("goal");
      } else {
        const int there = remaining(g.waypoints[j]);
        a.tags.emplace_back(there < here ? "closer" : there > here ? "farther" : "level");
      }
      out.push_back(std::move(a));
    }
  }
  out.push_back(StepAction{StepKind::Plan, -1, std::string(kNoopDisplay), {"noop"}});

  if (at_goal) {
    std::vector<std::int64_t> values;
    auto add = [&](std::int64_t v) {
      if (v > 0 && values.size() < kSolutionCandidates && std::find(values.begin(), values.end(), v) == values.end()) {
        values.push_back(v);
      }
    };
    add(r.length);
    add(p.ground_truth);
    add(std::abs(g.goal.row - g.start.row) + std::abs(g.goal.col - g.start.col));
    for (std::int64_t off = 2; values.size() < kSolutionCandidates; off += 2) {
      add(p.ground_truth + off);
      add(r.length + off);
    }
    for (const std::int64_t v : values) {
      out.push_back(StepAction{StepKind::Solution, v, answer_display(v), {v == r.length ? "exec" : "alt"}});
    }
  }

  Rng order(fnv1a64(state_key(s)));
  order.shuffle(out);
  return out;
}

std::optional<StepAction> GridPlanEnv::reference_step(const Problem& p, const State& s) const {
  if (is_terminal(s)) return std::nullopt;
  const auto& g = std::get<GridSpec>(p.spec);
  const Route r = replay(g, s);
  const std::string want = r.visited[g.waypoints.size()]
                               ? answer_display(p.ground_truth)
                               : go_display(static_cast<std::int64_t>(g.waypoints.size()), g.waypoints.size());
  for (auto& a : enumerate(p, s)) {
    if (a.display == want) return a;
  }
  return std::nullopt;
}

std::string GridPlanEnv::render(const Problem& p, const State& s) const {
  const auto& g = std::get<GridSpec>(p.spec);
  std::ostringstream os;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const Cell here{r, c};
      char ch = g.blocked[static_cast<std::size_t>(r * g.cols + c)] ? '#' : '.';
      if (here == g.start) ch = 'S';
      if (here == g.goal) ch = 'G';
      for (std::size_t j = 0; j < g.waypoints.size(); ++j) {
        if (g.waypoints[j] == here) ch = static_cast<char>('1' + j);
      }
      os << ch;
    }
    os << '\n';
  }
  os << "Find the length of the shortest route from S to G.\n";
  for (std::size_t i = 0; i < s.trace.size(); ++i) {
    os << "Step " << (i + 1) << ": " << s.trace[i].display << '\n';
  }
  return os.str();
}

}  // namespace cpl
