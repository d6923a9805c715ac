#pragma once

// Shared helpers for the test binaries. The simulator below is written
// against InstanceSpec only and shares no code with the library verifiers,
// so it serves as an independent oracle for realizability.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rfsc/model.hpp"

namespace rfsc::testing {

inline ThreadOp rd(VarId v) { return {OpKind::Read, v}; }
inline ThreadOp wr(VarId v) { return {OpKind::Write, v}; }
inline ThreadOp fence() { return {OpKind::Fence}; }
inline ThreadOp in_block(ThreadOp op, std::int32_t b) {
  op.block = b;
  return op;
}

inline RfEntry rf(ThreadId rt, std::uint32_t ri, ThreadId wt, std::uint32_t wi) {
  return {{rt, ri}, OpRef{wt, wi}};
}
inline RfEntry rf_init(ThreadId rt, std::uint32_t ri) { return {{rt, ri}, std::nullopt}; }

inline InstanceSpec make_spec(MemoryModel m, std::vector<std::vector<ThreadOp>> threads, std::vector<RfEntry> rfs,
                              std::uint32_t vars = 2) {
  InstanceSpec s;
  static const char* names[] = {"x", "y", "z", "u"};
  for (std::uint32_t v = 0; v < vars; ++v) s.var_names.push_back(names[v]);
  s.threads = std::move(threads);
  s.rf = std::move(rfs);
  s.model = m;
  return s;
}

// Store-buffering shapes with two writes per thread (var 0 = x, 1 = y).
// (a) one read sees the other thread's last write, the other a first
// write: realizable everywhere.
inline InstanceSpec realizable_all(MemoryModel m) {
  return make_spec(m, {{wr(0), wr(0), rd(1)}, {wr(1), wr(1), rd(0)}}, {rf(0, 2, 1, 1), rf(1, 2, 0, 0)});
}
// (b) each thread reads the other's first write: needs store buffering.
inline InstanceSpec needs_tso(MemoryModel m) {
  return make_spec(m, {{wr(0), wr(0), rd(1)}, {wr(1), wr(1), rd(0)}}, {rf(0, 2, 1, 0), rf(1, 2, 0, 0)});
}
// (c) y's write is seen while x still holds its initial value: needs
// per-variable buffers.
inline InstanceSpec needs_pso(MemoryModel m) {
  return make_spec(m, {{wr(0), wr(0), wr(1)}, {rd(1), rd(0)}}, {rf(1, 0, 0, 2), rf_init(1, 1)});
}

/// Brute-force realizability over reads, writes, fences and atomic blocks.
/// Each thread runs its ops in order; a write enters a store buffer (one per
/// thread under TSO, one per (thread, variable) under PSO, none under SC) and
/// later reaches memory; a read sees its own thread's newest buffered write
/// on the variable, otherwise memory; a fence waits for empty buffers; an
/// atomic block runs at once with its writes going straight to memory,
/// after the buffers they would pass through are empty.
class BufferSimulator {
 public:
  explicit BufferSimulator(const InstanceSpec& spec) : spec_(spec) {
    for (const auto& e : spec.rf) want_[e.read] = e.write;
    vars_ = spec.var_names.size();
  }

  bool realizable() {
    State s;
    s.pc.assign(spec_.threads.size(), 0);
    s.memory.assign(vars_, std::nullopt);
    s.buffers.assign(spec_.threads.size() * (spec_.model == MemoryModel::PSO ? vars_ : 1), {});
    return search(s);
  }

  std::size_t states() const { return seen_.size(); }

 private:
  using Src = std::optional<OpRef>;
  struct State {
    std::vector<std::uint32_t> pc;
    std::vector<Src> memory;
    std::vector<std::deque<std::pair<VarId, OpRef>>> buffers;
  };

  std::size_t buf(ThreadId t, VarId v) const {
    return spec_.model == MemoryModel::PSO ? t * vars_ + static_cast<std::size_t>(v) : t;
  }

  std::string key(const State& s) const {
    std::string k;
    auto put = [&](std::uint32_t x) { k += std::to_string(x) + ","; };
    for (auto p : s.pc) put(p);
    k += "|";
    for (const auto& m : s.memory) m ? (put(m->thread), put(m->index)) : (void)(k += "i,");
    for (const auto& b : s.buffers) {
      k += "|";
      for (const auto& [v, op] : b) put(op.index);
    }
    return k;
  }

  Src visible(const State& s, ThreadId t, VarId v) const {
    const auto& b = s.buffers[buf(t, v)];
    for (auto it = b.rbegin(); it != b.rend(); ++it)
      if (it->first == v) return it->second;
    return s.memory[static_cast<std::size_t>(v)];
  }

  bool buffers_empty(const State& s, ThreadId t) const {
    if (spec_.model != MemoryModel::PSO) return s.buffers[t].empty();
    for (std::size_t v = 0; v < vars_; ++v)
      if (!s.buffers[t * vars_ + v].empty()) return false;
    return true;
  }

  // Runs op i of thread t; false if a read sees the wrong write.
  bool run_op(State& s, ThreadId t, std::uint32_t i, bool direct) const {
    const ThreadOp& op = spec_.threads[t][i];
    switch (op.kind) {
      case OpKind::Read: {
        auto it = want_.find({t, i});
        return it != want_.end() && visible(s, t, op.var) == it->second;
      }
      case OpKind::Write:
        if (direct || spec_.model == MemoryModel::SC)
          s.memory[static_cast<std::size_t>(op.var)] = OpRef{t, i};
        else
          s.buffers[buf(t, op.var)].push_back({op.var, {t, i}});
        return true;
      case OpKind::Fence:
        return buffers_empty(s, t);
      default:
        return false;
    }
  }

  bool search(const State& s) {
    bool done = true;
    for (ThreadId t = 0; t < s.pc.size(); ++t) done = done && s.pc[t] == spec_.threads[t].size();
    if (done) return true;
    if (!seen_.insert(key(s)).second) return false;

    for (ThreadId t = 0; t < s.pc.size(); ++t) {
      const auto& ops = spec_.threads[t];
      std::uint32_t i = s.pc[t];
      if (i == ops.size()) continue;
      State n = s;
      bool ok = true;
      if (ops[i].block == kNoBlock) {
        ok = run_op(n, t, i, false);
        n.pc[t] = i + 1;
      } else {
        for (std::uint32_t j = i; ok && j < ops.size() && ops[j].block == ops[i].block; ++j) {
          if (ops[j].kind == OpKind::Write && !n.buffers[buf(t, ops[j].var)].empty()) ok = false;
          ok = ok && run_op(n, t, j, true);
          n.pc[t] = j + 1;
        }
      }
      if (ok && search(n)) return true;
    }
    for (std::size_t b = 0; b < s.buffers.size(); ++b) {
      if (s.buffers[b].empty()) continue;
      State n = s;
      auto [v, op] = n.buffers[b].front();
      n.buffers[b].pop_front();
      n.memory[static_cast<std::size_t>(v)] = op;
      if (search(n)) return true;
    }
    return false;
  }

  const InstanceSpec& spec_;
  std::size_t vars_ = 0;
  std::map<OpRef, Src> want_;
  std::set<std::string> seen_;
};

inline bool simulate_realizable(const InstanceSpec& spec) { return BufferSimulator(spec).realizable(); }

}  // namespace rfsc::testing
