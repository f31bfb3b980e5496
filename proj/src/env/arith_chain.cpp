#include <algorithm>
#include <sstream>

#include "cpl/env.hpp"
#include "cpl/error.hpp"
#include "cpl/hash.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

constexpr std::size_t kSolutionCandidates = 4;
constexpr int kNoopPayload = -1;
constexpr std::string_view kNoopDisplay = "review the question";

std::string qname(int i) { return "q" + std::to_string(i + 1); }

std::string compute_display(int i) { return "compute " + qname(i) + " next"; }

std::string answer_display(std::int64_t v) { return "answer " + std::to_string(v); }

std::int64_t apply_op(ArithOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case ArithOp::Add:
      return a + b;
    case ArithOp::Sub:
      return a - b;
    case ArithOp::Mul:
      return a * b;
  }
  return 0;
}

char op_char(ArithOp op) {
  switch (op) {
    case ArithOp::Add:
      return '+';
    case ArithOp::Sub:
      return '-';
    case ArithOp::Mul:
      return '*';
  }
  return '?';
}

/// Forward evaluation in topological order. Quantity `zeroed` (if any) reads
/// its quantity operands as 0, which is what computing it too early yields.
std::vector<std::int64_t> forward_values(const ArithSpec& spec, int zeroed = -1) {
  std::vector<std::int64_t> v(spec.quantities.size(), 0);
  for (std::size_t i = 0; i < spec.quantities.size(); ++i) {
    const auto& q = spec.quantities[i];
    auto read = [&](const ArithOperand& o) -> std::int64_t {
      if (!o.is_ref()) return o.constant;
      return static_cast<int>(i) == zeroed ? 0 : v[static_cast<std::size_t>(o.ref)];
    };
    v[i] = apply_op(q.op, read(q.lhs), read(q.rhs));
  }
  return v;
}

/// Target plus everything it transitively reads.
std::vector<bool> needed_set(const ArithSpec& spec) {
  std::vector<bool> needed(spec.quantities.size(), false);
  needed[static_cast<std::size_t>(spec.target)] = true;
  for (int i = spec.target; i >= 0; --i) {
    if (!needed[static_cast<std::size_t>(i)]) continue;
    const auto& q = spec.quantities[static_cast<std::size_t>(i)];
    if (q.lhs.is_ref()) needed[static_cast<std::size_t>(q.lhs.ref)] = true;
    if (q.rhs.is_ref()) needed[static_cast<std::size_t>(q.rhs.ref)] = true;
  }
  return needed;
}

struct Progress {
  std::vector<bool> computed;
  std::vector<std::int64_t> value;  // as executed along the trace
};

Progress replay(const ArithSpec& spec, const State& s) {
  Progress pr{std::vector<bool>(spec.quantities.size(), false), std::vector<std::int64_t>(spec.quantities.size(), 0)};
  for (const auto& a : s.trace) {
    if (a.kind != StepKind::Plan || a.payload < 0 || a.payload >= static_cast<std::int64_t>(spec.quantities.size())) {
      continue;
    }
    const auto i = static_cast<std::size_t>(a.payload);
    const auto& q = spec.quantities[i];
    auto read = [&](const ArithOperand& o) -> std::int64_t {
      if (!o.is_ref()) return o.constant;
      const auto r = static_cast<std::size_t>(o.ref);
      return pr.computed[r] ? pr.value[r] : 0;
    };
    pr.value[i] = apply_op(q.op, read(q.lhs), read(q.rhs));
    pr.computed[i] = true;
  }
  return pr;
}

bool is_ready(const ArithQuantity& q, const std::vector<bool>& computed) {
  auto ok = [&](const ArithOperand& o) { return !o.is_ref() || computed[static_cast<std::size_t>(o.ref)]; };
  return ok(q.lhs) && ok(q.rhs);
}

std::string operand_text(const ArithOperand& o) { return o.is_ref() ? qname(o.ref) : std::to_string(o.constant); }

void check_spec(const ArithSpec& spec) {
  if (spec.target < 0 || spec.target >= static_cast<int>(spec.quantities.size())) {
    throw Error("arith spec target out of range");
  }
  for (std::size_t i = 0; i < spec.quantities.size(); ++i) {
    for (const auto* o : {&spec.quantities[i].lhs, &spec.quantities[i].rhs}) {
      if (o->is_ref() && o->ref >= static_cast<int>(i)) throw Error("arith spec is not topologically ordered");
    }
  }
}

}  // namespace

int ArithChainEnv::chain_length(Difficulty d) {
  switch (d) {
    case Difficulty::Easy:
      return 2;
    case Difficulty::Medium:
      return 3;
    case Difficulty::Hard:
      return 4;
    case Difficulty::Expert:
      return 5;
  }
  throw ConfigError("invalid difficulty");
}

std::vector<Problem> ArithChainEnv::generate(std::uint64_t seed, std::size_t n, Difficulty difficulty) const {
  if (n < 1) throw PreconditionError("generate requires n >= 1");
  const int k = chain_length(difficulty);
  if (k + 1 > max_depth()) throw ConfigError("difficulty needs more steps than max_depth allows");

  std::vector<Problem> out;
  out.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    Rng rng(derive_seed(derive_seed(seed, "arith"), idx));

    // Interleave k needed quantities with the decoys; each kind keeps its own order.
    std::vector<bool> is_needed(static_cast<std::size_t>(k), true);
    is_needed.resize(static_cast<std::size_t>(k + kDecoys), false);
    rng.shuffle(is_needed);

    ArithSpec spec;
    std::vector<int> needed_ids;
    for (std::size_t pos = 0; pos < is_needed.size(); ++pos) {
      ArithQuantity q;
      const int here = static_cast<int>(pos);
      const auto small_const = [&] { return ArithOperand{-1, rng.between(1, 9)}; };
      const auto mul_const = [&] { return ArithOperand{-1, rng.between(2, 3)}; };
      q.op = static_cast<ArithOp>(rng.below(3));
      if (is_needed[pos]) {
        if (needed_ids.empty()) {
          q.lhs = small_const();
          q.rhs = q.op == ArithOp::Mul ? mul_const() : small_const();
        } else {
          q.lhs = ArithOperand{needed_ids.back(), 0};
          if (needed_ids.size() >= 2 && q.op != ArithOp::Mul && rng.uniform() < 0.35) {
            q.rhs = ArithOperand{needed_ids[rng.below(needed_ids.size() - 1)], 0};
          } else {
            q.rhs = q.op == ArithOp::Mul ? mul_const() : small_const();
          }
        }
        needed_ids.push_back(here);
      } else {
        if (here > 0 && rng.uniform() < 0.5) {
          q.lhs = ArithOperand{static_cast<int>(rng.below(static_cast<std::uint64_t>(here))), 0};
        } else {
          q.lhs = small_const();
        }
        q.rhs = q.op == ArithOp::Mul ? mul_const() : small_const();
      }
      spec.quantities.push_back(q);
    }
    spec.target = needed_ids.back();
    check_spec(spec);

    Problem p;
    p.id = "arith-" + std::to_string(seed) + "-" + std::to_string(idx);
    p.env = std::string(name());
    p.ground_truth = forward_values(spec)[static_cast<std::size_t>(spec.target)];
    // The chain must really be k long: every needed quantity was placed.
    const auto needed = needed_set(spec);
    if (std::count(needed.begin(), needed.end(), true) != k) throw Error("generated chain has wrong length");
    p.spec = std::move(spec);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<StepAction> ArithChainEnv::enumerate(const Problem& p, const State& s) const {
  const auto& spec = std::get<ArithSpec>(p.spec);
  const Progress pr = replay(spec, s);
  const auto needed = needed_set(spec);

  std::vector<bool> fed(spec.quantities.size(), false);
  for (const auto& q : spec.quantities) {
    if (q.lhs.is_ref()) fed[static_cast<std::size_t>(q.lhs.ref)] = true;
    if (q.rhs.is_ref()) fed[static_cast<std::size_t>(q.rhs.ref)] = true;
  }

  std::vector<StepAction> out;
  bool deps_done = true;
  for (std::size_t i = 0; i < spec.quantities.size(); ++i) {
    if (needed[i] && !pr.computed[i]) deps_done = false;
    if (pr.computed[i]) continue;
    StepAction a{StepKind::Plan, static_cast<std::int64_t>(i), compute_display(static_cast<int>(i)), {}};
    a.tags.emplace_back(is_ready(spec.quantities[i], pr.computed) ? "ready" : "premature");
    if (static_cast<int>(i) == spec.target) {
      a.tags.emplace_back("target");
    } else {
      a.tags.emplace_back(fed[i] ? "feeds" : "leaf");
    }
    out.push_back(std::move(a));
  }
  out.push_back(StepAction{StepKind::Plan, kNoopPayload, std::string(kNoopDisplay), {"noop"}});

  if (deps_done) {
    const std::int64_t executed = pr.value[static_cast<std::size_t>(spec.target)];
    std::vector<std::int64_t> values;
    auto add = [&](std::int64_t v) {
      if (values.size() < kSolutionCandidates && std::find(values.begin(), values.end(), v) == values.end()) {
        values.push_back(v);
      }
    };
    add(executed);
    add(p.ground_truth);
    // Answers produced by evaluating one needed step out of order.
    for (std::size_t j = 0; j < spec.quantities.size(); ++j) {
      const auto& q = spec.quantities[j];
      if (needed[j] && (q.lhs.is_ref() || q.rhs.is_ref())) {
        add(forward_values(spec, static_cast<int>(j))[static_cast<std::size_t>(spec.target)]);
      }
    }
    // Answers produced by substituting a decoy for the target's quantity input.
    const auto truth = forward_values(spec);
    const auto& tq = spec.quantities[static_cast<std::size_t>(spec.target)];
    if (tq.lhs.is_ref()) {
      for (std::size_t d = 0; d < spec.quantities.size(); ++d) {
        if (needed[d]) continue;
        const std::int64_t rhs = tq.rhs.is_ref() ? truth[static_cast<std::size_t>(tq.rhs.ref)] : tq.rhs.constant;
        add(apply_op(tq.op, truth[d], rhs));
      }
    }
    for (std::int64_t off = 1; values.size() < kSolutionCandidates; ++off) {
      add(p.ground_truth + off);
      add(p.ground_truth - off);
    }
    for (const std::int64_t v : values) {
      out.push_back(StepAction{StepKind::Solution, v, answer_display(v), {v == executed ? "exec" : "alt"}});
    }
  }

  // Position carries no information: order is a fixed pseudo-random function of the state.
  Rng order(fnv1a64(state_key(s)));
  order.shuffle(out);
  return out;
}

std::optional<StepAction> ArithChainEnv::reference_step(const Problem& p, const State& s) const {
  if (is_terminal(s)) return std::nullopt;
  const auto& spec = std::get<ArithSpec>(p.spec);
  const Progress pr = replay(spec, s);
  const auto needed = needed_set(spec);
  std::string want;
  for (std::size_t i = 0; i < spec.quantities.size(); ++i) {
    if (needed[i] && !pr.computed[i] && is_ready(spec.quantities[i], pr.computed)) {
      want = compute_display(static_cast<int>(i));
      break;
    }
  }
  if (want.empty()) want = answer_display(p.ground_truth);
  for (auto& a : enumerate(p, s)) {
    if (a.display == want) return a;
  }
  return std::nullopt;
}

std::string ArithChainEnv::render(const Problem& p, const State& s) const {
  const auto& spec = std::get<ArithSpec>(p.spec);
  std::ostringstream os;
  for (std::size_t i = 0; i < spec.quantities.size(); ++i) {
    const auto& q = spec.quantities[i];
    os << qname(static_cast<int>(i)) << " = " << operand_text(q.lhs) << ' ' << op_char(q.op) << ' '
       << operand_text(q.rhs) << '\n';
  }
  os << "Find " << qname(spec.target) << ".\n";
  for (std::size_t i = 0; i < s.trace.size(); ++i) {
    os << "Step " << (i + 1) << ": " << s.trace[i].display << '\n';
  }
  return os.str();
}

}  // namespace cpl
