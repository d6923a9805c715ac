#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rfsc/model.hpp"
#include "rfsc/program.hpp"

namespace rfsc {

struct ExploreStats {
  std::size_t classes_explored = 0;
  std::size_t maximal_traces = 0;
  std::size_t witness_calls = 0;     // verifier invocations on new schedules
  std::size_t witness_failures = 0;  // of those, unrealizable (pruned) mutations
};

struct ExploreOptions {
  bool use_closure = true;
  bool collect_classes = false;
};

struct ExploreResult {
  ExploreStats stats;
  /// rf_class_key of each explored maximal trace, in exploration order
  /// (only with collect_classes).
  std::vector<std::string> classes;
  std::size_t assertion_failures = 0;
};

ExploreResult explore(const Program& prog, MemoryModel model, const ExploreOptions& opts = {});

/// Runs the machine to a maximal state: the lowest-numbered thread with an
/// enabled thread step goes first; a buffer is flushed (lowest first) only
/// when no thread step is enabled. Returns the events produced.
std::vector<ProgEvent> maximal_extension(Machine& m);

/// Thread event identity: (thread, per-thread index).
using EventKey = std::pair<ThreadId, std::uint32_t>;

/// A maximally extended run as one exploration call sees it.
struct ExtendedRun {
  std::vector<ProgEvent> trace;   // every event, memory-writes included
  std::vector<ProgEvent> events;  // thread events in execution order
  std::size_t extension_start = 0;  // events[i] belongs to the extension iff i >= this
  /// Write parts of atomic reads that changed source in this schedule. They
  /// are new, so earlier reads may take them like extension writes.
  std::set<EventKey> fresh_writes;
};

/// A proposed change of the reads-from map: the new thread-event sequence
/// (reads carry their desired source) and the reads that must be committed.
struct Mutation {
  std::vector<ProgEvent> events;
  EventKey read;
  std::optional<EventKey> partner;  // the other read of an RMW swap or lock reversal
  std::set<EventKey> newly_marked;
};

/// Mutations of the read at events[pos]: one per other write it may read
/// from (restricted to extension writes when the read predates the
/// extension). Candidates that can never be realized (a later or stale write
/// of the read's own thread, a source causally after the read, a lock
/// released to two acquires) are left out.
std::vector<Mutation> mutations_for_read(const Program& prog, const ExtendedRun& run, std::size_t pos);

/// For a lock acquire at events[pos]: one reversal per later acquire of the
/// same lock (of the extension, when the acquire is committed) that can run
/// without it. The later acquire takes its source; the acquire and its causal
/// future leave the prefix and run again in the extension.
std::vector<Mutation> lock_reversal_mutations(const Program& prog, const ExtendedRun& run, std::size_t pos);

/// For an RMW or successful CAS read at events[pos]: one swap mutation per
/// atomic step that read its write and can take its place.
std::vector<Mutation> rmw_cas_extra_mutations(const Program& prog, const ExtendedRun& run, std::size_t pos);

/// Verification instance of a thread-event sequence: ops per thread, atomic
/// steps as blocks, SC compiled to TSO (the fences are already events).
InstanceSpec instance_of(const Program& prog, MemoryModel model, const std::vector<ProgEvent>& events);

/// Machine steps replaying a witness of instance_of(...).
std::vector<Step> steps_of_witness(const Instance& inst, const std::vector<EventId>& witness);

}  // namespace rfsc
