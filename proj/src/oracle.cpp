#include "rfsc/oracle.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "rfsc/semantics.hpp"

namespace rfsc {

namespace {

class InstanceSearch {
 public:
  InstanceSearch(const Instance& inst, const ProgramOrder& po) : inst_(inst), po_(po) {}

  OracleResult run() {
    Trace t(inst_, po_);
    std::vector<std::int32_t> owner(inst_.num_vars(), -1);
    if (dfs(t, owner)) {
      res_.realizable = true;
    }
    res_.states = seen_.size();
    return res_;
  }

 private:
  std::string key(const Trace& t) const {
    std::string k;
    auto put = [&k](std::uint32_t v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
    for (auto c : t.chain_counts()) put(c);
    for (VarId v = 0; v < static_cast<VarId>(inst_.num_vars()); ++v) put(t.last_memory_write(v));
    return k;
  }

  // Appends the step starting at e; false if it observes a wrong write or
  // breaks lock ownership.
  bool step(Trace& t, EventId e, std::vector<std::int32_t>& owner) const {
    const Event& ev = inst_.event(e);
    std::vector<EventId> unit{e};
    if (ev.block != kNoBlock) {
      unit = inst_.block_events(ev.block);
      if (unit.front() != e) return false;
    }
    for (EventId x : unit) {
      if (!t.preds_executed(x)) return false;
      const Event& xe = inst_.event(x);
      if (xe.kind == EventKind::Read && xe.lock) {
        auto& o = owner[static_cast<std::size_t>(xe.var)];
        if (o >= 0) return false;
        o = static_cast<std::int32_t>(xe.thread);
      }
      if (xe.kind == EventKind::BufferWrite && xe.lock) owner[static_cast<std::size_t>(xe.var)] = -1;
      t.extend(x);
      if (xe.kind == EventKind::Read && !(t.observed_rf(x) == inst_.rf(x))) return false;
    }
    return true;
  }

  bool dfs(const Trace& t, const std::vector<std::int32_t>& owner) {
    if (t.complete()) {
      res_.witness = t.order();
      return true;
    }
    if (!seen_.insert(key(t)).second) return false;
    for (std::uint32_t c = 0; c < po_.num_chains(); ++c) {
      EventId e = t.chain_head(c);
      if (e == kNoEvent) continue;
      Trace next = t;
      auto own = owner;
      if (!step(next, e, own)) continue;
      if (dfs(next, own)) return true;
    }
    return false;
  }

  const Instance& inst_;
  const ProgramOrder& po_;
  std::unordered_set<std::string> seen_;
  OracleResult res_;
};

}  // namespace

OracleResult oracle_realizable(const Instance& inst, const ProgramOrder& po, std::size_t cap) {
  if (inst.size() > cap)
    throw CapExceeded("instance has " + std::to_string(inst.size()) + " events, oracle cap is " + std::to_string(cap));
  return InstanceSearch(inst, po).run();
}

namespace {

class ProgramSearch {
 public:
  ProgramSearch(const Program& prog, std::size_t cap) : prog_(prog), cap_(cap) {}

  void dfs(const Machine& m, std::vector<ProgEvent>& run) {
    // Machine state plus the reads-from so far, in (thread, index) order.
    std::vector<std::array<std::uint32_t, 5>> rfs;
    for (const auto& e : run)
      if (e.rf) rfs.push_back({e.thread, e.index, e.rf->init ? 1u : 0u, e.rf->thread, e.rf->index});
    std::sort(rfs.begin(), rfs.end());
    std::string k = m.state_key();
    for (const auto& v : rfs) k.append(reinterpret_cast<const char*>(v.data()), sizeof(std::uint32_t) * v.size());
    if (!seen_.insert(std::move(k)).second) return;
    if (seen_.size() > cap_) throw CapExceeded("program state space exceeds " + std::to_string(cap_) + " states");
    auto steps = m.enabled();
    if (steps.empty()) {
      ++out_.maximal_runs;
      out_.classes.insert(rf_class_key(prog_, run));
      return;
    }
    for (const Step& s : steps) {
      Machine next = m;
      auto evs = next.execute(s);
      const auto mark = run.size();
      run.insert(run.end(), evs.begin(), evs.end());
      dfs(next, run);
      run.resize(mark);
    }
  }

  RfClassCount result() {
    out_.states = seen_.size();
    return std::move(out_);
  }

 private:
  const Program& prog_;
  std::size_t cap_;
  std::unordered_set<std::string> seen_;
  RfClassCount out_;
};

}  // namespace

RfClassCount oracle_rf_classes(const Program& prog, MemoryModel model, std::size_t state_cap) {
  ProgramSearch s(prog, state_cap);
  Machine m(prog, model);
  std::vector<ProgEvent> run;
  s.dfs(m, run);
  return s.result();
}

}  // namespace rfsc
