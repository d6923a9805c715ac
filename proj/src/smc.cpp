#include "rfsc/smc.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "rfsc/verify.hpp"

namespace rfsc {

std::vector<ProgEvent> maximal_extension(Machine& m) {
  std::vector<ProgEvent> out;
  for (;;) {
    auto steps = m.enabled();
    if (steps.empty()) return out;
    // enabled() lists thread steps by thread, then flushes.
    auto evs = m.execute(steps.front());
    out.insert(out.end(), evs.begin(), evs.end());
  }
}

namespace {

EventKey key_of(const ProgEvent& e) { return {e.thread, e.index}; }

// Indexes over an extended run used by the mutation builders.
class RunIndex {
 public:
  RunIndex(const Program& prog, const ExtendedRun& run) : run_(run) {
    const auto& evs = run.events;
    prev_.assign(evs.size(), -1);
    std::vector<std::int64_t> last(prog.num_threads(), -1);
    for (std::size_t i = 0; i < evs.size(); ++i) {
      pos_[key_of(evs[i])] = i;
      prev_[i] = last[evs[i].thread];
      last[evs[i].thread] = static_cast<std::int64_t>(i);
    }
    last_ = last;
  }

  std::optional<std::size_t> pos(const EventKey& k) const {
    auto it = pos_.find(k);
    if (it == pos_.end()) return std::nullopt;
    return it->second;
  }

  std::int64_t value_of(const ProgWrite& w) const {
    if (w.init) return 0;
    auto p = pos({w.thread, w.index});
    return p ? run_.events[*p].value : 0;
  }

  /// Position of the write part of the atomic read at i, if it wrote.
  std::optional<std::size_t> write_part(std::size_t i) const {
    const ProgEvent& r = run_.events[i];
    if (r.kind != EventKind::Read || !r.atomic) return std::nullopt;
    auto p = pos({r.thread, r.index + 1});
    if (!p) return std::nullopt;
    const ProgEvent& w = run_.events[*p];
    if (w.kind != EventKind::BufferWrite || !w.atomic) return std::nullopt;
    return p;
  }

  /// Causal past (positions) of the given starts under program order, joins
  /// and the cross-thread reads-from edges of every read not in `cut`.
  std::vector<bool> causal_past(const std::vector<std::size_t>& starts, const std::set<std::size_t>& cut) const {
    const auto& evs = run_.events;
    std::vector<bool> seen(evs.size(), false);
    std::vector<std::size_t> stack;
    auto push = [&](std::int64_t q) {
      if (q >= 0 && !seen[static_cast<std::size_t>(q)]) {
        seen[static_cast<std::size_t>(q)] = true;
        stack.push_back(static_cast<std::size_t>(q));
      }
    };
    for (auto s : starts) push(static_cast<std::int64_t>(s));
    while (!stack.empty()) {
      std::size_t q = stack.back();
      stack.pop_back();
      const ProgEvent& e = evs[q];
      push(prev_[q]);
      if (e.kind == EventKind::Join) push(last_[e.join_target]);
      if (e.kind == EventKind::Read && e.rf && !e.rf->init && e.rf->thread != e.thread && !cut.count(q)) {
        auto p = pos({e.rf->thread, e.rf->index});
        if (p) push(static_cast<std::int64_t>(*p));
      }
    }
    return seen;
  }

  /// Positions causally after `start` (itself included), ignoring the
  /// reads-from edges of reads in `cut`. A mutated read precedes its source
  /// in the event order, so this is a search, not a forward pass.
  std::vector<bool> causal_future(std::size_t start, const std::set<std::size_t>& cut) const {
    const auto& evs = run_.events;
    std::vector<std::vector<std::size_t>> succ(evs.size());
    for (std::size_t q = 0; q < evs.size(); ++q) {
      const ProgEvent& e = evs[q];
      if (prev_[q] >= 0) succ[static_cast<std::size_t>(prev_[q])].push_back(q);
      if (e.kind == EventKind::Join && last_[e.join_target] >= 0)
        succ[static_cast<std::size_t>(last_[e.join_target])].push_back(q);
      if (e.kind == EventKind::Read && e.rf && !e.rf->init && e.rf->thread != e.thread && !cut.count(q))
        if (auto p = pos({e.rf->thread, e.rf->index})) succ[*p].push_back(q);
    }
    std::vector<bool> in(evs.size(), false);
    std::vector<std::size_t> stack{start};
    in[start] = true;
    while (!stack.empty()) {
      std::size_t q = stack.back();
      stack.pop_back();
      for (std::size_t n : succ[q])
        if (!in[n]) {
          in[n] = true;
          stack.push_back(n);
        }
    }
    return in;
  }

  /// Latest buffer-write on v of thread t strictly before position i.
  std::optional<std::size_t> last_local_write(VarId v, std::size_t i) const {
    for (std::int64_t q = prev_[i]; q >= 0; q = prev_[static_cast<std::size_t>(q)]) {
      const ProgEvent& e = run_.events[static_cast<std::size_t>(q)];
      if (e.kind == EventKind::BufferWrite && e.var == v) return static_cast<std::size_t>(q);
    }
    return std::nullopt;
  }

 private:
  const ExtendedRun& run_;
  std::map<EventKey, std::size_t> pos_;
  std::vector<std::int64_t> prev_;
  std::vector<std::int64_t> last_;
};

// Assembles the new sequence from the prefix through `pos`, the causes-after set, and the
// write parts of atomic reads it contains. `write_decision` overrides, per
// atomic read, whether it keeps (or gains) a write part.
struct SequenceBuilder {
  const ExtendedRun& run;
  const RunIndex& index;

  std::vector<ProgEvent> build(std::size_t pos, const std::vector<std::size_t>& causes_after,
                               const std::map<std::size_t, ProgWrite>& new_rf,
                               const std::map<std::size_t, bool>& write_decision,
                               const std::vector<bool>* dropped = nullptr) const {
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i <= pos; ++i)
      if (!dropped || !(*dropped)[i]) chosen.push_back(i);
    chosen.insert(chosen.end(), causes_after.begin(), causes_after.end());

    std::vector<ProgEvent> out;
    for (std::size_t i : chosen) {
      const ProgEvent& src = run.events[i];
      // A write part is emitted right after its read, wherever the run has it.
      if (src.kind == EventKind::BufferWrite && src.atomic) continue;
      ProgEvent e = src;
      auto rf = new_rf.find(i);
      if (rf != new_rf.end()) e.rf = rf->second;
      out.push_back(e);
      if (e.kind != EventKind::Read || !e.atomic) continue;
      auto wp = index.write_part(i);
      auto dec = write_decision.find(i);
      bool writes = dec != write_decision.end() ? dec->second : wp.has_value();
      if (!writes) continue;
      ProgEvent w;
      if (wp) {
        w = run.events[*wp];
      } else {
        w.thread = e.thread;
        w.index = e.index + 1;
        w.kind = EventKind::BufferWrite;
        w.var = e.var;
        w.atomic = true;
      }
      out.push_back(w);
    }
    return out;
  }
};

bool has_thread_event_after(const std::vector<std::size_t>& causes_after, const ExtendedRun& run, ThreadId t) {
  return std::any_of(causes_after.begin(), causes_after.end(), [&](std::size_t q) { return run.events[q].thread == t; });
}

std::set<EventKey> reads_at(const std::vector<std::size_t>& positions, const ExtendedRun& run) {
  std::set<EventKey> out;
  for (auto q : positions)
    if (run.events[q].kind == EventKind::Read) out.insert(key_of(run.events[q]));
  return out;
}

bool lock_source_taken(const std::vector<ProgEvent>& events, const EventKey& read, const ProgWrite& src) {
  for (const auto& e : events)
    if (e.kind == EventKind::Read && e.lock && key_of(e) != read && e.rf && *e.rf == src) return true;
  return false;
}

}  // namespace

std::vector<Mutation> mutations_for_read(const Program& prog, const ExtendedRun& run, std::size_t pos) {
  const ProgEvent& r = run.events.at(pos);
  if (r.kind != EventKind::Read || !r.rf) return {};
  RunIndex index(prog, run);
  const bool in_extension = pos >= run.extension_start;

  std::vector<ProgWrite> candidates;
  if (in_extension) candidates.push_back(ProgWrite::initial(r.var));
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    const ProgEvent& w = run.events[i];
    if (w.kind != EventKind::BufferWrite || w.var != r.var) continue;
    if (!in_extension && i < run.extension_start && !run.fresh_writes.count(key_of(w))) continue;
    candidates.push_back(ProgWrite{w.thread, w.index, w.var, false});
  }

  const auto local = index.last_local_write(r.var, pos);
  std::vector<Mutation> out;
  for (const ProgWrite& w : candidates) {
    if (w == *r.rf) continue;
    if (w.init && local) continue;  // the own buffered or flushed write shadows init
    if (!w.init && w.thread == r.thread && (!local || run.events[*local].index != w.index)) continue;

    std::vector<std::size_t> causes_after;
    if (!w.init) {
      auto wpos = index.pos({w.thread, w.index});
      auto past = index.causal_past({*wpos}, {pos});
      for (std::size_t q = pos + 1; q < run.events.size(); ++q)
        if (past[q]) causes_after.push_back(q);
    }
    if (has_thread_event_after(causes_after, run, r.thread)) continue;  // source depends on r

    std::map<std::size_t, bool> decision;
    if (r.atomic) decision[pos] = !r.cas || index.value_of(w) == r.cas_expected;
    Mutation m;
    m.events = SequenceBuilder{run, index}.build(pos, causes_after, {{pos, w}}, decision);
    m.read = key_of(r);
    if (r.lock && lock_source_taken(m.events, m.read, w)) continue;
    m.newly_marked = reads_at(causes_after, run);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Mutation> lock_reversal_mutations(const Program& prog, const ExtendedRun& run, std::size_t pos) {
  const ProgEvent& a = run.events.at(pos);
  if (a.kind != EventKind::Read || !a.lock || !a.rf) return {};
  RunIndex index(prog, run);
  std::vector<Mutation> out;
  // A committed acquire may only give way to an acquire of the extension.
  const std::size_t first = pos < run.extension_start ? std::max(run.extension_start, pos + 1) : pos + 1;
  for (std::size_t b = first; b < run.events.size(); ++b) {
    const ProgEvent& later = run.events[b];
    if (later.kind != EventKind::Read || !later.lock || later.var != a.var || later.thread == a.thread || !later.rf) continue;
    // a and everything after it leave the prefix; b comes in with its causal past.
    auto dropped = index.causal_future(pos, {b});
    std::vector<std::size_t> starts{b};
    if (!a.rf->init)
      if (auto p = index.pos({a.rf->thread, a.rf->index}); p && *p > pos) starts.push_back(*p);
    auto past = index.causal_past(starts, {b});
    std::vector<std::size_t> causes_after;
    bool needs_a = false;
    for (std::size_t q = pos + 1; q < run.events.size(); ++q)
      if (past[q]) {
        causes_after.push_back(q);
        needs_a = needs_a || dropped[q];
      }
    if (needs_a) continue;
    Mutation m;
    m.events = SequenceBuilder{run, index}.build(pos, causes_after, {{b, *a.rf}}, {}, &dropped);
    m.read = key_of(a);
    m.partner = key_of(later);
    if (lock_source_taken(m.events, *m.partner, *a.rf)) continue;
    m.newly_marked = reads_at(causes_after, run);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Mutation> rmw_cas_extra_mutations(const Program& prog, const ExtendedRun& run, std::size_t pos) {
  const ProgEvent& r = run.events.at(pos);
  if (r.kind != EventKind::Read || !r.atomic || !r.rf) return {};
  RunIndex index(prog, run);
  auto own_write = index.write_part(pos);
  if (!own_write) return {};  // failed CAS
  const ProgWrite own{r.thread, run.events[*own_write].index, r.var, false};
  const ProgWrite old_src = *r.rf;
  const std::int64_t old_value = index.value_of(old_src);

  std::vector<Mutation> out;
  for (std::size_t q = 0; q < run.events.size(); ++q) {
    const ProgEvent& other = run.events[q];
    if (q == pos || other.kind != EventKind::Read || !other.atomic || !other.rf || !(*other.rf == own)) continue;
    if (other.cas && old_value != other.cas_expected) continue;  // would not succeed on r's old source
    const std::int64_t other_writes = other.cas ? other.rmw_operand : old_value + other.rmw_operand;
    const ProgWrite other_write{other.thread, other.index + 1, other.var, false};

    // r's old source moves to q; if r was itself mutated, that source may
    // lie after r.
    std::vector<std::size_t> starts{q};
    if (!old_src.init)
      if (auto p = index.pos({old_src.thread, old_src.index}); p && *p > pos) starts.push_back(*p);
    auto past = index.causal_past(starts, {pos, q});
    std::vector<std::size_t> causes_after;
    for (std::size_t i = pos + 1; i < run.events.size(); ++i)
      if (past[i]) causes_after.push_back(i);
    if (has_thread_event_after(causes_after, run, r.thread)) continue;

    std::map<std::size_t, bool> decision{{pos, !r.cas || other_writes == r.cas_expected}, {q, true}};
    Mutation m;
    m.events = SequenceBuilder{run, index}.build(pos, causes_after, {{pos, other_write}, {q, old_src}}, decision);
    m.read = key_of(r);
    m.partner = key_of(other);
    m.newly_marked = reads_at(causes_after, run);
    out.push_back(std::move(m));
  }
  return out;
}

InstanceSpec instance_of(const Program& prog, MemoryModel model, const std::vector<ProgEvent>& events) {
  InstanceSpec spec;
  spec.var_names = prog.var_names;
  spec.model = model == MemoryModel::PSO ? MemoryModel::PSO : MemoryModel::TSO;
  spec.threads.assign(prog.num_threads(), {});
  std::vector<std::vector<const ProgEvent*>> per(prog.num_threads());
  for (const auto& e : events) per[e.thread].push_back(&e);
  std::int32_t next_block = 0;
  for (ThreadId t = 0; t < prog.num_threads(); ++t) {
    auto& evs = per[t];
    std::sort(evs.begin(), evs.end(), [](const ProgEvent* a, const ProgEvent* b) { return a->index < b->index; });
    for (std::size_t i = 0; i < evs.size(); ++i) {
      const ProgEvent& e = *evs[i];
      if (e.index != i) throw std::logic_error("thread events of a schedule must form a prefix");
      ThreadOp op;
      op.var = e.var;
      switch (e.kind) {
        case EventKind::Read: {
          op.kind = e.lock ? OpKind::LockAcquire : OpKind::Read;
          bool with_write = e.atomic && i + 1 < evs.size() && evs[i + 1]->kind == EventKind::BufferWrite && evs[i + 1]->atomic;
          if (with_write) op.block = next_block;
          break;
        }
        case EventKind::BufferWrite:
          if (e.lock) {
            op.kind = OpKind::LockRelease;
          } else {
            op.kind = OpKind::Write;
            if (e.atomic) op.block = next_block++;
          }
          break;
        case EventKind::Fence:
          op.kind = OpKind::Fence;
          break;
        case EventKind::Join:
          op.kind = OpKind::Join;
          op.join_target = e.join_target;
          break;
        case EventKind::MemoryWrite:
          throw std::logic_error("memory-write in a thread-event sequence");
      }
      spec.threads[t].push_back(op);
      if (e.kind == EventKind::Read) {
        RfEntry entry{{t, e.index}, std::nullopt};
        if (e.rf && !e.rf->init) entry.write = OpRef{e.rf->thread, e.rf->index};
        spec.rf.push_back(entry);
      }
    }
  }
  return spec;
}

std::vector<Step> steps_of_witness(const Instance& inst, const std::vector<EventId>& witness) {
  std::vector<Step> steps;
  for (EventId e : witness) {
    const Event& ev = inst.event(e);
    if (ev.block != kNoBlock && inst.block_events(ev.block).front() != e) continue;
    if (ev.kind == EventKind::MemoryWrite)
      steps.push_back(Step{true, ev.thread, inst.verify_model() == MemoryModel::PSO ? ev.var : kNoVar});
    else
      steps.push_back(Step{false, ev.thread, kNoVar});
  }
  return steps;
}

// ---------------------------------------------------------------------------

namespace {

struct Schedule {
  std::vector<ProgEvent> events;  // the new sequence, reads carrying their new sources
  std::vector<Step> witness;
  std::set<EventKey> marked;
  std::set<EventKey> fresh_parents;  // atomic reads whose write part is new
};

struct ScheduleSet {
  std::vector<Schedule> items;
  std::set<std::string> seen;  // keys of the schedules added so far
};

std::string sequence_key(const std::vector<ProgEvent>& evs, std::size_t count, bool rf_of_last) {
  std::ostringstream os;
  for (std::size_t i = 0; i < count; ++i) {
    const ProgEvent& e = evs[i];
    os << e.thread << '.' << e.index;
    if (e.rf && (rf_of_last || i + 1 < count)) {
      if (e.rf->init)
        os << "<i";
      else
        os << '<' << e.rf->thread << '.' << e.rf->index;
    }
    os << ';';
  }
  return os.str();
}

// Order-independent form of a schedule's sequence and sources: two schedules with the same events
// and the same sources lead to the same class whatever their interleaving.
std::string canonical_key(std::vector<ProgEvent> evs) {
  std::sort(evs.begin(), evs.end(), [](const ProgEvent& a, const ProgEvent& b) {
    return a.thread != b.thread ? a.thread < b.thread : a.index < b.index;
  });
  return sequence_key(evs, evs.size(), true);
}

class Explorer {
 public:
  Explorer(const Program& prog, MemoryModel model, const ExploreOptions& opts)
      : prog_(prog), model_(model), opts_(opts) {}

  void call(const Schedule& sched) {
    // Replay the witness, checking it realizes the desired reads-from.
    Machine m(prog_, model_);
    ExtendedRun run;
    std::map<EventKey, std::optional<ProgWrite>> desired;
    for (const auto& e : sched.events)
      if (e.kind == EventKind::Read) desired[key_of(e)] = e.rf;
    for (const Step& s : sched.witness) {
      auto evs = m.execute(s);
      for (const auto& e : evs) {
        if (e.kind == EventKind::Read) {
          auto it = desired.find(key_of(e));
          if (it == desired.end() || !(it->second == e.rf))
            throw std::logic_error("witness replay does not realize the schedule's reads-from");
        }
        run.trace.push_back(e);
      }
    }
    std::map<EventKey, ProgEvent> replayed;
    for (const auto& e : run.trace)
      if (e.kind != EventKind::MemoryWrite) replayed[key_of(e)] = e;
    for (const auto& e : sched.events) {
      auto it = replayed.find(key_of(e));
      if (it == replayed.end()) throw std::logic_error("witness replay misses a scheduled event");
      run.events.push_back(it->second);
    }
    run.extension_start = run.events.size();
    for (const auto& e : run.events)
      if (e.kind == EventKind::BufferWrite && e.atomic && sched.fresh_parents.count({e.thread, e.index - 1}))
        run.fresh_writes.insert(key_of(e));

    auto ext = maximal_extension(m);
    for (const auto& e : ext) {
      run.trace.push_back(e);
      if (e.kind != EventKind::MemoryWrite) run.events.push_back(e);
    }
    ++res_.stats.maximal_traces;
    ++res_.stats.classes_explored;
    res_.assertion_failures += m.assertion_failures();
    if (opts_.collect_classes) res_.classes.push_back(rf_class_key(prog_, run.trace));

    const auto& evs = run.events;
    // Schedule sets this call owns and drains: one per extension read, plus
    // a set for any earlier read whose prefix no live set covers.
    std::map<std::size_t, std::string> owned;
    for (std::size_t i = run.extension_start; i < evs.size(); ++i)
      if (evs[i].kind == EventKind::Read) {
        std::string key = sequence_key(evs, i + 1, false);
        if (schedules_.count(key)) continue;  // an ancestor drains it
        schedules_.emplace(key, std::make_unique<ScheduleSet>());
        owned[i] = std::move(key);
      }

    for (std::size_t i = 0; i < evs.size(); ++i) {
      if (evs[i].kind != EventKind::Read || sched.marked.count(key_of(evs[i]))) continue;
      auto muts = mutations_for_read(prog_, run, i);
      for (auto& x : rmw_cas_extra_mutations(prog_, run, i)) muts.push_back(std::move(x));
      for (auto& x : lock_reversal_mutations(prog_, run, i)) muts.push_back(std::move(x));
      if (muts.empty()) continue;
      const std::string key = sequence_key(evs, i + 1, false);
      auto set_it = schedules_.find(key);
      if (set_it == schedules_.end()) {
        owned[i] = key;
        set_it = schedules_.emplace(key, std::make_unique<ScheduleSet>()).first;
      }
      ScheduleSet& set = *set_it->second;
      for (auto& mut : muts) {
        if (!set.seen.insert(canonical_key(mut.events)).second) continue;
        auto witness = find_witness(mut.events);
        if (!witness) continue;
        Schedule s;
        s.events = std::move(mut.events);
        s.witness = std::move(*witness);
        for (const auto& e : s.events)
          if (e.kind == EventKind::Read && sched.marked.count(key_of(e))) s.marked.insert(key_of(e));
        s.marked.insert(mut.newly_marked.begin(), mut.newly_marked.end());
        s.fresh_parents.insert(mut.read);
        if (mut.partner) s.fresh_parents.insert(*mut.partner);
        set.items.push_back(std::move(s));
      }
    }

    for (auto it = owned.rbegin(); it != owned.rend(); ++it) {
      const std::string& key = it->second;
      // Recursive calls may add to this set while it is drained.
      for (std::size_t j = 0; j < schedules_.at(key)->items.size(); ++j) {
        Schedule s = schedules_.at(key)->items[j];
        call(s);
      }
      schedules_.erase(key);
    }
  }

  ExploreResult result() { return std::move(res_); }

 private:
  std::optional<std::vector<Step>> find_witness(const std::vector<ProgEvent>& events) {
    ++res_.stats.witness_calls;
    Instance inst = Instance::build(instance_of(prog_, model_, events));
    if (!validate_instance(inst).empty()) {
      ++res_.stats.witness_failures;
      return std::nullopt;
    }
    ProgramOrder po(inst);
    VerifyResult v = verify(inst, po, Algo::Fast, opts_.use_closure);
    if (!v.realizable) {
      ++res_.stats.witness_failures;
      return std::nullopt;
    }
    return steps_of_witness(inst, v.witness);
  }

  const Program& prog_;
  MemoryModel model_;
  ExploreOptions opts_;
  std::map<std::string, std::unique_ptr<ScheduleSet>> schedules_;
  ExploreResult res_;
};

}  // namespace

ExploreResult explore(const Program& prog, MemoryModel model, const ExploreOptions& opts) {
  Explorer ex(prog, model, opts);
  ex.call(Schedule{});
  return ex.result();
}

}  // namespace rfsc
