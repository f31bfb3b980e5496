#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cpl {

enum class StepKind { Plan, Solution };
enum class Phase { Planning, Solved };
enum class Difficulty { Easy, Medium, Hard, Expert };

std::string_view to_string(StepKind kind);
std::string_view to_string(Phase phase);
std::string_view to_string(Difficulty d);
StepKind parse_step_kind(std::string_view s);
/// Throws ConfigError for unknown levels.
Difficulty parse_difficulty(std::string_view s);

/// A candidate next step. Plan payloads index the subject of the directive
/// (a quantity, a waypoint); solution payloads are the committed answer.
/// `display` is the canonical string and is unique within a candidate set.
/// `tags` are observable descriptors the environment attaches to the step.
struct StepAction {
  StepKind kind = StepKind::Plan;
  std::int64_t payload = 0;
  std::string display;
  std::vector<std::string> tags;

  bool operator==(const StepAction&) const = default;
};

struct State {
  std::string problem_id;
  std::vector<StepAction> trace;
  Phase phase = Phase::Planning;
  int depth = 0;

  bool operator==(const State&) const = default;
};

struct Verdict {
  bool correct = false;
  double reward = -1.0;

  bool operator==(const Verdict&) const = default;
};

/// Canonical "problem_id|step|step|..." serialization of a state's trace.
std::string state_key(const State& s);
/// Splits a state key into problem id and step displays.
std::pair<std::string, std::vector<std::string>> split_state_key(std::string_view key);

// ---- ArithChain ----------------------------------------------------------

enum class ArithOp { Add, Sub, Mul };

struct ArithOperand {
  int ref = -1;  // quantity index, or -1 for a constant
  std::int64_t constant = 0;

  bool is_ref() const { return ref >= 0; }
  bool operator==(const ArithOperand&) const = default;
};

struct ArithQuantity {
  ArithOp op = ArithOp::Add;
  ArithOperand lhs;
  ArithOperand rhs;

  bool operator==(const ArithQuantity&) const = default;
};

/// Quantities are named q1..qn by position and listed in topological order.
struct ArithSpec {
  std::vector<ArithQuantity> quantities;
  int target = 0;

  bool operator==(const ArithSpec&) const = default;
};

// ---- GridPlan ------------------------------------------------------------

struct Cell {
  int row = 0;
  int col = 0;

  bool operator==(const Cell&) const = default;
};

struct GridSpec {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> blocked;  // row-major
  Cell start;
  Cell goal;
  std::vector<Cell> waypoints;  // named w1..wm

  bool operator==(const GridSpec&) const = default;
};

struct Problem {
  std::string id;
  std::string env;
  std::variant<ArithSpec, GridSpec> spec;
  std::int64_t ground_truth = 0;

  bool operator==(const Problem&) const = default;
};

State initial_state(const Problem& p);

/// A synthetic multi-step task family with a plan phase and a terminal
/// solution step. All members are pure; instances may be shared across
/// threads.
class Environment {
 public:
  explicit Environment(int max_depth);
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;

  /// Deterministic in (seed, n, difficulty). Each problem's ground truth is
  /// re-derived and checked before it is returned.
  virtual std::vector<Problem> generate(std::uint64_t seed, std::size_t n, Difficulty difficulty) const = 0;

  /// Finite candidate universe at a planning state. Throws
  /// PreconditionError on terminal states.
  std::vector<StepAction> candidate_actions(const Problem& p, const State& s) const;

  /// Throws InvalidTransition unless `a` is one of candidate_actions(p, s).
  /// The returned trace holds the canonical candidate (with its tags).
  State apply(const Problem& p, const State& s, const StepAction& a) const;

  /// Appends an externally proposed step without consulting the candidate
  /// universe. Only terminal states are rejected.
  State apply_unchecked(const State& s, const StepAction& a) const;

  bool is_terminal(const State& s) const;

  /// Throws PreconditionError on non-terminal states.
  Verdict verify(const Problem& p, const State& s) const;

  /// The canonical correct next step, or nullopt when the state can no longer
  /// reach a correct answer along the canonical route.
  virtual std::optional<StepAction> reference_step(const Problem& p, const State& s) const = 0;

  /// Human-readable problem statement plus the trace so far.
  virtual std::string render(const Problem& p, const State& s) const = 0;

  int max_depth() const { return max_depth_; }

 protected:
  virtual std::vector<StepAction> enumerate(const Problem& p, const State& s) const = 0;

 private:
  int max_depth_;
};

class ArithChainEnv final : public Environment {
 public:
  static constexpr int kDecoys = 3;

  explicit ArithChainEnv(int max_depth = 6) : Environment(max_depth) {}

  std::string_view name() const override { return "arith"; }
  std::vector<Problem> generate(std::uint64_t seed, std::size_t n, Difficulty difficulty) const override;
  std::optional<StepAction> reference_step(const Problem& p, const State& s) const override;
  std::string render(const Problem& p, const State& s) const override;

  /// Number of needed quantities in the target's dependency chain.
  static int chain_length(Difficulty d);

 protected:
  std::vector<StepAction> enumerate(const Problem& p, const State& s) const override;
};

class GridPlanEnv final : public Environment {
 public:
  static constexpr int kWaypoints = 4;

  explicit GridPlanEnv(int max_depth = 6) : Environment(max_depth) {}

  std::string_view name() const override { return "grid"; }
  std::vector<Problem> generate(std::uint64_t seed, std::size_t n, Difficulty difficulty) const override;
  std::optional<StepAction> reference_step(const Problem& p, const State& s) const override;
  std::string render(const Problem& p, const State& s) const override;

  static int grid_size(Difficulty d);

 protected:
  std::vector<StepAction> enumerate(const Problem& p, const State& s) const override;
};

/// "arith" or "grid". Throws ConfigError otherwise.
std::unique_ptr<Environment> make_environment(std::string_view name, int max_depth = 6);

}  // namespace cpl
