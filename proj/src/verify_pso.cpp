#include "rfsc/verify_pso.hpp"

#include <algorithm>

#include "rfsc/verify_tso.hpp"

namespace rfsc {

bool FenceMap::leq(const FenceMap& o) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i] > o.entries[i]) return false;
  return true;
}

bool FenceMap::all_zero() const {
  return std::all_of(entries.begin(), entries.end(), [](std::uint32_t v) { return v == 0; });
}

bool is_spurious(EventId wm, const Trace& t) {
  const Instance& inst = t.instance();
  const WriteRef ref = inst.write_ref_of(wm);
  if (t.remaining_readers(inst.write_slot(ref)) > 0) return false;
  if (!t.contains(wm)) return true;
  const auto& order = t.order();
  auto pos = std::find(order.begin(), order.end(), wm);
  for (auto it = pos + 1; it != order.end(); ++it)
    if (inst.event(*it).kind == EventKind::Read && t.observed_rf(*it) == ref) return false;
  return true;
}

std::vector<EventId> pending_writes(const Trace& t, ThreadId thr) { return t.pending_writes(thr); }

FenceMap fence_map(const Trace& t) {
  const Instance& inst = t.instance();
  const ProgramOrder& po = t.program_order();
  const std::uint32_t k = inst.num_threads();
  FenceMap fm{k, std::vector<std::uint32_t>(static_cast<std::size_t>(k) * k, 0)};
  for (ThreadId thr = 0; thr < k; ++thr) {
    const auto& evs = inst.thread_events(thr);
    bool fence_left = false;
    for (std::size_t i = t.chain_counts()[po.thread_chain(thr)]; i < evs.size() && !fence_left; ++i)
      fence_left = inst.event(evs[i]).kind == EventKind::Fence;
    if (!fence_left) continue;
    for (ThreadId other = 0; other < k; ++other) {
      if (other == thr) continue;
      const auto& oevs = inst.thread_events(other);
      for (std::size_t i = t.chain_counts()[po.thread_chain(other)]; i < oevs.size(); ++i) {
        const Event& r = inst.event(oevs[i]);
        if (r.kind != EventKind::Read) continue;
        const WriteRef& src = inst.rf(r.id);
        if (src.var == kNoVar) continue;
        auto src_thread = inst.write_thread(src);
        if (src_thread && (*src_thread == thr || *src_thread == other)) continue;
        if (!(t.last_write_ref(r.var) == src)) continue;  // held by its source
        if (t.buffered_write(thr, r.var) == kNoEvent) continue;
        fm.entries[thr * k + other] = r.local_index + 1;
      }
    }
  }
  return fm;
}

namespace {

class Stepper {
 public:
  Stepper(Trace& t, const ClosureOrder* closure, VerifyChecks* checks) : t_(t), closure_(closure), checks_(checks) {}

  bool memory_write(EventId wm) {
    if (!tso_event_executable(wm, t_) || !closure_allows(closure_, wm, t_)) return false;
    if (checks_) {
      FenceMap before = fence_map(t_);
      bool spurious = is_spurious(wm, t_);
      t_.extend(wm);
      FenceMap after = fence_map(t_);
      ++checks_->fmap_monotone_checks;
      if (!before.leq(after) || (spurious && before != after)) ++checks_->fmap_monotone_violations;
    } else {
      t_.extend(wm);
    }
    return true;
  }

  bool thread_event(EventId e) {
    const Instance& inst = t_.instance();
    const Event& ev = inst.event(e);
    if (ev.kind == EventKind::Read) {
      const WriteRef& w = inst.rf(e);
      if (w.var == kNoVar) return false;
      if (!w.is_init() && !t_.contains(w.buffer_write)) return false;
      if (!t_.preds_executed(e)) return false;
      if (inst.rf_is_remote(e) && !w.is_init()) {
        EventId wm = inst.memory_write_of(w);
        if (!t_.contains(wm)) {
          if (t_.inside_block()) return false;
          if (!memory_write(wm)) return false;
        }
      }
    } else if (ev.kind == EventKind::Fence) {
      for (EventId wm : t_.pending_writes(ev.thread))
        if (!memory_write(wm)) return false;
      if (!t_.preds_executed(e)) return false;
    } else if (!tso_event_executable(e, t_)) {
      return false;
    }
    if (!closure_allows(closure_, e, t_)) return false;
    t_.extend(e);
    return true;
  }

 private:
  Trace& t_;
  const ClosureOrder* closure_;
  VerifyChecks* checks_;
};

}  // namespace

std::optional<Trace> pso_step(EventId e, const Trace& t, const ClosureOrder* closure, VerifyChecks* checks) {
  const Instance& inst = t.instance();
  const Event& ev = inst.event(e);
  Trace out = t;
  Stepper step(out, closure, checks);
  if (ev.kind == EventKind::MemoryWrite) {
    if (ev.block != kNoBlock) return std::nullopt;
    if (!step.memory_write(e)) return std::nullopt;
    return out;
  }
  if (ev.block == kNoBlock) {
    if (!step.thread_event(e)) return std::nullopt;
    return out;
  }
  const auto& block = inst.block_events(ev.block);
  if (block.front() != e) return std::nullopt;
  // Like a fence restricted to the block's variables: earlier writes that
  // the block's memory-writes must follow go out first.
  const ProgramOrder& po = t.program_order();
  for (EventId wm : t.pending_writes(ev.thread)) {
    bool needed = std::any_of(block.begin(), block.end(), [&](EventId x) {
      return inst.event(x).kind == EventKind::MemoryWrite && po.less(wm, x);
    });
    if (needed && !step.memory_write(wm)) return std::nullopt;
  }
  for (EventId x : block) {
    bool ok = inst.event(x).kind == EventKind::MemoryWrite ? step.memory_write(x) : step.thread_event(x);
    if (!ok) return std::nullopt;
  }
  return out;
}

bool pso_executable(EventId e, const Trace& t, const ClosureOrder* closure) {
  return pso_step(e, t, closure).has_value();
}

PsoVisitKey pso_visit_key(const Trace& t) {
  const Instance& inst = t.instance();
  PsoVisitKey key;
  key.local_counts.resize(inst.num_threads());
  for (ThreadId thr = 0; thr < inst.num_threads(); ++thr)
    key.local_counts[thr] = t.chain_counts()[t.program_order().thread_chain(thr)];
  key.fmap = fence_map(t);
  return key;
}

VerifyResult verify_pso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts) {
  VerifyResult res;
  if (has_shadowed_initial_read(inst)) return res;
  const ClosureOrder* closure = opts.closure;
  VerifyChecks* checks = opts.checks;

  const bool fence_free = std::none_of(inst.events().begin(), inst.events().end(),
                                       [](const Event& e) { return e.kind == EventKind::Fence; });
  const std::uint64_t kd = static_cast<std::uint64_t>(inst.num_threads()) * inst.num_vars();
  const std::uint64_t fmap_cap = kd >= 63 ? UINT64_MAX : (std::uint64_t{1} << kd);
  std::map<std::vector<std::uint32_t>, std::set<FenceMap>> fmaps_per_key;
  auto record = [&](const PsoVisitKey& key) {
    if (!checks) return;
    auto& s = fmaps_per_key[key.local_counts];
    s.insert(key.fmap);
    checks->max_fmaps_per_key = std::max(checks->max_fmaps_per_key, s.size());
    if (s.size() > fmap_cap) ++checks->fmap_count_violations;
    if (fence_free && s.size() > 1) ++checks->fence_free_violations;
  };

  std::vector<Trace> work;
  work.emplace_back(inst, po);
  std::set<PsoVisitKey> done;
  {
    PsoVisitKey k0 = pso_visit_key(work.back());
    record(k0);
    done.insert(std::move(k0));
  }
  res.stats.states = 1;

  while (!work.empty()) {
    Trace sigma = std::move(work.back());
    work.pop_back();
    ++res.stats.pops;

    // Flush spurious memory-writes while any is executable.
    bool progress = true;
    while (progress) {
      progress = false;
      for (ThreadId thr = 0; thr < inst.num_threads(); ++thr) {
        for (std::uint32_t l = 1; l <= inst.num_lanes(thr); ++l) {
          for (;;) {
            EventId wm = sigma.chain_head(po.thread_chain(thr) + l);
            if (wm == kNoEvent || inst.event(wm).block != kNoBlock || !is_spurious(wm, sigma)) break;
            auto next = pso_step(wm, sigma, closure, checks);
            if (!next) break;
            ++res.stats.extensions;
            sigma = std::move(*next);
            progress = true;
          }
        }
      }
    }
    if (checks && checks->visited) checks->visited->push_back(sigma.order());

    if (sigma.complete()) {
      res.realizable = true;
      res.witness = sigma.order();
      return res;
    }

    std::vector<Trace> branches;
    for (ThreadId thr = 0; thr < inst.num_threads(); ++thr) {
      EventId e = sigma.chain_head(po.thread_chain(thr));
      if (e == kNoEvent) continue;
      auto next = pso_step(e, sigma, closure, checks);
      if (!next) continue;
      res.stats.extensions += next->size() - sigma.size();
      PsoVisitKey key = pso_visit_key(*next);
      if (done.count(key)) continue;
      record(key);
      done.insert(std::move(key));
      ++res.stats.states;
      branches.push_back(std::move(*next));
    }
    for (auto it = branches.rbegin(); it != branches.rend(); ++it) work.push_back(std::move(*it));
  }
  return res;
}

VerifyResult naive_verify_pso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts) {
  return naive_verify(inst, po, opts);
}

}  // namespace rfsc
