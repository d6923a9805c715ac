#pragma once

#include "rfsc/verify.hpp"

namespace rfsc {

/// k x k matrix, row-major; entry (thr, other) is 0 or the 1-based index of
/// the latest read of `other` that must run before thr's next fence.
struct FenceMap {
  std::uint32_t threads = 0;
  std::vector<std::uint32_t> entries;

  std::uint32_t at(ThreadId thr, ThreadId other) const { return entries[thr * threads + other]; }
  bool leq(const FenceMap& o) const;
  bool all_zero() const;
  friend bool operator==(const FenceMap&, const FenceMap&) = default;
  friend auto operator<=>(const FenceMap&, const FenceMap&) = default;
};

/// No unexecuted read wants wM, and every executed read that observed wM did
/// so before wM reached memory.
bool is_spurious(EventId wm, const Trace& t);

/// Pending memory-writes of thr in (variable, index) order.
std::vector<EventId> pending_writes(const Trace& t, ThreadId thr);

FenceMap fence_map(const Trace& t);

/// PSO executability of the step starting at thread event or memory-write e
/// (a block is checked as a whole).
bool pso_executable(EventId e, const Trace& t, const ClosureOrder* closure = nullptr);

/// The extension the PSO search performs for thread event e: for a remote
/// read, its source memory-write first; for a fence, the pending writes of
/// its thread; for an atomic block, the pending writes its memory-writes
/// must follow; then e (or its whole block). Memory-writes are appended
/// alone. Returns nullopt if not executable.
std::optional<Trace> pso_step(EventId e, const Trace& t, const ClosureOrder* closure = nullptr,
                              VerifyChecks* checks = nullptr);

/// Executed thread-event count per thread plus the fence map.
struct PsoVisitKey {
  std::vector<std::uint32_t> local_counts;
  FenceMap fmap;
  friend auto operator<=>(const PsoVisitKey&, const PsoVisitKey&) = default;
};
PsoVisitKey pso_visit_key(const Trace& t);

VerifyResult verify_pso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts = {});
VerifyResult naive_verify_pso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts = {});

}  // namespace rfsc
