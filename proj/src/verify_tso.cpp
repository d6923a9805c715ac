#include "rfsc/verify_tso.hpp"

#include <algorithm>

#include "rfsc/verify_pso.hpp"

namespace rfsc {

bool tso_event_executable(EventId e, const Trace& t) {
  if (!t.preds_executed(e)) return false;
  const Instance& inst = t.instance();
  const Event& ev = inst.event(e);
  if (ev.kind == EventKind::Read) {
    const WriteRef& w = inst.rf(e);
    if (w.var == kNoVar) return false;
    if (inst.rf_is_remote(e) && !w.is_init() && !t.contains(inst.memory_write_of(w))) return false;
  } else if (ev.kind == EventKind::MemoryWrite) {
    if (t.held(ev.var)) return false;
    for (EventId r : inst.readers(inst.write_slot(inst.write_ref_of(e)))) {
      if (!inst.rf_is_remote(r)) continue;
      EventId own = inst.last_local_write_before(r);
      if (own != kNoEvent && !t.contains(own)) return false;
    }
  }
  return true;
}

std::optional<Trace> tso_step(EventId e, const Trace& t, const ClosureOrder* closure) {
  const Instance& inst = t.instance();
  const Event& ev = inst.event(e);
  if (ev.block == kNoBlock) {
    if (!tso_event_executable(e, t) || !closure_allows(closure, e, t)) return std::nullopt;
    return t.extended(e);
  }
  const auto& block = inst.block_events(ev.block);
  if (block.front() != e) return std::nullopt;
  Trace out = t;
  for (EventId x : block) {
    if (!tso_event_executable(x, out) || !closure_allows(closure, x, out)) return std::nullopt;
    out.extend(x);
  }
  return out;
}

bool tso_executable(EventId e, const Trace& t, const ClosureOrder* closure) {
  return tso_step(e, t, closure).has_value();
}

std::vector<std::uint32_t> tso_visit_key(const Trace& t) {
  const Instance& inst = t.instance();
  const ProgramOrder& po = t.program_order();
  std::vector<std::uint32_t> key(inst.num_threads(), 0);
  for (ThreadId thr = 0; thr < inst.num_threads(); ++thr)
    for (std::uint32_t l = 1; l <= inst.num_lanes(thr); ++l) key[thr] += t.chain_counts()[po.thread_chain(thr) + l];
  return key;
}

namespace {

// The thread's next thread event, unless it opens a block holding a
// memory-write (those are branched on like memory-writes).
EventId saturation_candidate(const Trace& t, ThreadId thr) {
  const Instance& inst = t.instance();
  EventId e = t.chain_head(t.program_order().thread_chain(thr));
  if (e == kNoEvent) return kNoEvent;
  const Event& ev = inst.event(e);
  if (ev.block != kNoBlock && inst.block_has_memory_write(ev.block)) return kNoEvent;
  return e;
}

}  // namespace

VerifyResult verify_tso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts) {
  VerifyResult res;
  if (has_shadowed_initial_read(inst)) return res;
  const ClosureOrder* closure = opts.closure;
  VerifyChecks* checks = opts.checks;

  std::uint64_t bound = 1;
  for (ThreadId thr = 0; thr < inst.num_threads(); ++thr) {
    std::uint64_t mw = 0;
    for (std::uint32_t l = 1; l <= inst.num_lanes(thr); ++l) mw += inst.lane_events(thr, l).size();
    bound *= mw + 1;
  }

  std::vector<Trace> work;
  work.emplace_back(inst, po);
  std::set<std::vector<std::uint32_t>> done;
  done.insert(std::vector<std::uint32_t>(inst.num_threads(), 0));
  res.stats.states = 1;

  while (!work.empty()) {
    Trace sigma = std::move(work.back());
    work.pop_back();
    ++res.stats.pops;

    // Saturate thread events, round-robin by thread index.
    bool progress = true;
    while (progress) {
      progress = false;
      for (ThreadId thr = 0; thr < inst.num_threads(); ++thr) {
        for (;;) {
          EventId e = saturation_candidate(sigma, thr);
          if (e == kNoEvent) break;
          auto next = tso_step(e, sigma, closure);
          if (!next) break;
          res.stats.extensions += next->size() - sigma.size();
          sigma = std::move(*next);
          progress = true;
        }
      }
    }
    if (checks) {
      for (ThreadId thr = 0; thr < inst.num_threads(); ++thr) {
        EventId e = saturation_candidate(sigma, thr);
        if (e != kNoEvent && tso_executable(e, sigma, closure)) ++checks->maximality_violations;
      }
      if (checks->visited) checks->visited->push_back(sigma.order());
    }

    if (sigma.complete()) {
      res.realizable = true;
      res.witness = sigma.order();
      return res;
    }

    // Branch on executable memory-writes (and blocks that contain one).
    std::vector<Trace> branches;
    for (ThreadId thr = 0; thr < inst.num_threads(); ++thr) {
      std::vector<EventId> candidates;
      for (std::uint32_t l = 1; l <= inst.num_lanes(thr); ++l) {
        EventId wm = sigma.chain_head(po.thread_chain(thr) + l);
        if (wm != kNoEvent && inst.event(wm).block == kNoBlock) candidates.push_back(wm);
      }
      EventId head = sigma.chain_head(po.thread_chain(thr));
      if (head != kNoEvent && inst.event(head).block != kNoBlock && inst.block_has_memory_write(inst.event(head).block))
        candidates.push_back(head);
      for (EventId c : candidates) {
        auto next = tso_step(c, sigma, closure);
        if (!next) continue;
        res.stats.extensions += next->size() - sigma.size();
        if (done.insert(tso_visit_key(*next)).second) {
          ++res.stats.states;
          branches.push_back(std::move(*next));
        }
      }
    }
    if (checks) {
      ++checks->tso_bound_checks;
      if (done.size() > bound) ++checks->tso_bound_violations;
    }
    for (auto it = branches.rbegin(); it != branches.rend(); ++it) work.push_back(std::move(*it));
  }
  return res;
}

VerifyResult naive_verify_tso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts) {
  return naive_verify(inst, po, opts);
}

// ---------------------------------------------------------------------------

bool has_shadowed_initial_read(const Instance& inst) {
  for (EventId r : inst.reads()) {
    const WriteRef& w = inst.rf(r);
    if (w.var != kNoVar && w.is_init() && inst.last_local_write_before(r) != kNoEvent) return true;
  }
  return false;
}

VerifyResult naive_verify(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts) {
  VerifyResult res;
  if (has_shadowed_initial_read(inst)) return res;
  std::vector<Trace> work;
  work.emplace_back(inst, po);
  std::set<std::vector<std::uint32_t>> visited;
  visited.insert(work.back().chain_counts());
  res.stats.states = 1;
  while (!work.empty()) {
    Trace sigma = std::move(work.back());
    work.pop_back();
    ++res.stats.pops;
    if (opts.checks && opts.checks->visited) opts.checks->visited->push_back(sigma.order());
    if (sigma.complete()) {
      res.realizable = true;
      res.witness = sigma.order();
      return res;
    }
    std::vector<Trace> branches;
    for (std::uint32_t c = 0; c < po.num_chains(); ++c) {
      EventId e = sigma.chain_head(c);
      if (e == kNoEvent) continue;
      auto next = tso_step(e, sigma, opts.closure);
      if (!next) continue;
      res.stats.extensions += next->size() - sigma.size();
      if (visited.insert(next->chain_counts()).second) {
        ++res.stats.states;
        branches.push_back(std::move(*next));
      }
    }
    for (auto it = branches.rbegin(); it != branches.rend(); ++it) work.push_back(std::move(*it));
  }
  return res;
}

VerifyResult verify(const Instance& inst, const ProgramOrder& po, Algo algo, bool use_closure, VerifyChecks* checks) {
  std::optional<ClosureOrder> closure;
  if (use_closure) {
    closure = compute_closure(inst, po);
    if (!closure) return {};
  }
  VerifyOptions opts{closure ? &*closure : nullptr, checks};
  if (algo == Algo::Naive) return naive_verify(inst, po, opts);
  return inst.verify_model() == MemoryModel::PSO ? verify_pso(inst, po, opts) : verify_tso(inst, po, opts);
}

}  // namespace rfsc
