#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rfsc/closure.hpp"
#include "rfsc/model.hpp"
#include "rfsc/semantics.hpp"

namespace rfsc {

struct VerifyStats {
  std::size_t states = 0;      // traces inserted into the visited set
  std::size_t pops = 0;        // traces taken from the worklist
  std::size_t extensions = 0;  // events appended to any trace
};

/// Optional instrumentation. Counters only grow; a verifier run with a
/// VerifyChecks attached records every invariant check it performed.
struct VerifyChecks {
  // PSO: fence map never shrinks across a memory-write extension, and stays
  // equal across a spurious one.
  std::size_t fmap_monotone_checks = 0;
  std::size_t fmap_monotone_violations = 0;
  // PSO: distinct fence maps per thread-event set vs 2^(threads*vars).
  std::size_t max_fmaps_per_key = 0;
  std::size_t fmap_count_violations = 0;
  // PSO without fences: one fence map per thread-event set.
  std::size_t fence_free_violations = 0;
  // TSO: visited keys never exceed prod(memory-writes per thread + 1).
  std::size_t tso_bound_checks = 0;
  std::size_t tso_bound_violations = 0;
  // TSO: after saturation no thread event is executable.
  std::size_t maximality_violations = 0;
  // When set, each trace taken from the worklist (after saturation / flushing)
  // is appended here.
  std::vector<std::vector<EventId>>* visited = nullptr;
};

struct VerifyOptions {
  const ClosureOrder* closure = nullptr;
  VerifyChecks* checks = nullptr;
};

struct VerifyResult {
  bool realizable = false;
  std::vector<EventId> witness;
  VerifyStats stats;
};

/// True iff every closure predecessor of e is already in the trace.
inline bool closure_allows(const ClosureOrder* closure, EventId e, const Trace& t) {
  return closure == nullptr || closure->before(e).is_subset_of(t.executed());
}

/// Reads that can never see their rf in any trace: initial-write source
/// shadowed by an earlier write of the reader's own thread.
bool has_shadowed_initial_read(const Instance& inst);

/// Lower-set enumeration over all of (X, PO) with single-event steps
/// (atomic blocks as one step), keyed on the full lower set. Works for both
/// models; the PO passed in decides which.
VerifyResult naive_verify(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts = {});

enum class Algo { Fast, Naive };

/// Dispatch on the instance's model (SC runs as TSO), optionally computing
/// and using the closure first.
VerifyResult verify(const Instance& inst, const ProgramOrder& po, Algo algo, bool use_closure,
                    VerifyChecks* checks = nullptr);

}  // namespace rfsc
