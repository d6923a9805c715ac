#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace rfsc {

using EventId = std::uint32_t;
using ThreadId = std::uint32_t;
using VarId = std::int32_t;
using Bitset = boost::dynamic_bitset<std::uint64_t>;

inline constexpr EventId kNoEvent = std::numeric_limits<EventId>::max();
inline constexpr VarId kNoVar = -1;
inline constexpr std::int32_t kNoBlock = -1;

enum class MemoryModel { SC, TSO, PSO };

const char* to_string(MemoryModel m);
MemoryModel parse_memory_model(const std::string& s);

enum class EventKind : std::uint8_t { Read, BufferWrite, MemoryWrite, Fence, Join };

const char* to_string(EventKind k);

struct Event {
  EventId id = kNoEvent;
  ThreadId thread = 0;
  EventKind kind = EventKind::Read;
  VarId var = kNoVar;
  /// Position in the event's chain: thread events of its thread, or
  /// memory-writes of its lane.
  std::uint32_t local_index = 0;
  /// 0 for thread events; memory-write lanes start at 1 (one lane per thread
  /// under TSO, one per (thread, variable) under PSO).
  std::uint32_t lane = 0;
  std::int32_t block = kNoBlock;
  /// The other half of a two-phase write.
  EventId partner = kNoEvent;
  ThreadId join_target = 0;
  /// Lock acquire (a read) or lock release (a write pair) on a lock variable.
  bool lock = false;
  /// Fence injected by the SC encoding; absent from the source description.
  bool virtual_fence = false;
  /// Index of the originating op in the source thread description.
  std::uint32_t op_index = 0;

  bool is_thread_event() const { return kind != EventKind::MemoryWrite; }
  bool is_write_half() const {
    return kind == EventKind::BufferWrite || kind == EventKind::MemoryWrite;
  }
};

/// A two-phase write, named by its buffer-write, or the implicit initial write
/// of a variable.
struct WriteRef {
  EventId buffer_write = kNoEvent;
  VarId var = kNoVar;

  static WriteRef init(VarId v) { return {kNoEvent, v}; }
  bool is_init() const { return buffer_write == kNoEvent; }
  friend bool operator==(const WriteRef&, const WriteRef&) = default;
  friend auto operator<=>(const WriteRef&, const WriteRef&) = default;
};

// ---------------------------------------------------------------------------
// Model-independent description of an instance: what the JSON format holds.

enum class OpKind : std::uint8_t { Read, Write, Fence, LockAcquire, LockRelease, Join };

struct ThreadOp {
  OpKind kind = OpKind::Read;
  VarId var = kNoVar;
  std::int32_t block = kNoBlock;
  ThreadId join_target = 0;
};

struct OpRef {
  ThreadId thread = 0;
  std::uint32_t index = 0;
  friend bool operator==(const OpRef&, const OpRef&) = default;
  friend auto operator<=>(const OpRef&, const OpRef&) = default;
};

struct RfEntry {
  OpRef read;
  std::optional<OpRef> write;  // nullopt: the initial write
};

struct InstanceSpec {
  std::vector<std::string> var_names;
  std::vector<std::vector<ThreadOp>> threads;
  std::vector<RfEntry> rf;
  MemoryModel model = MemoryModel::TSO;

  VarId var_id(const std::string& name);  // interns
};

class MalformedInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------

/// Proper event set with program structure and reads-from map. SC inputs are
/// stored as TSO instances with a virtual fence after every write.
class Instance {
 public:
  /// Expands the spec into events. Throws MalformedInstance on structural
  /// problems (rf to a non-write, unknown op reference, out-of-range var).
  /// Semantic checks live in validate_instance().
  static Instance build(const InstanceSpec& spec);

  MemoryModel model() const { return model_; }
  /// Model the verifiers run under (SC is TSO).
  MemoryModel verify_model() const {
    return model_ == MemoryModel::PSO ? MemoryModel::PSO : MemoryModel::TSO;
  }
  std::uint32_t num_threads() const { return num_threads_; }
  std::uint32_t num_vars() const { return static_cast<std::uint32_t>(var_names_.size()); }
  std::size_t size() const { return events_.size(); }
  const std::vector<std::string>& var_names() const { return var_names_; }

  const Event& event(EventId e) const { return events_[e]; }
  const std::vector<Event>& events() const { return events_; }

  const std::vector<EventId>& thread_events(ThreadId t) const { return thread_events_[t]; }
  std::uint32_t num_lanes(ThreadId t) const { return static_cast<std::uint32_t>(lanes_[t].size()); }
  /// Memory-writes of lane `lane` (1-based) of thread t, in PO order.
  const std::vector<EventId>& lane_events(ThreadId t, std::uint32_t lane) const {
    return lanes_[t][lane - 1];
  }

  const std::vector<EventId>& reads() const { return reads_; }
  const std::vector<EventId>& buffer_writes() const { return buffer_writes_; }
  const std::vector<EventId>& memory_writes() const { return memory_writes_; }

  /// rf(r) for a read r.
  const WriteRef& rf(EventId read) const { return rf_[read]; }
  /// Memory-write half of a write ref; kNoEvent for the initial write.
  EventId memory_write_of(const WriteRef& w) const {
    return w.is_init() ? kNoEvent : events_[w.buffer_write].partner;
  }
  /// Thread of a write ref; the initial write belongs to no thread.
  std::optional<ThreadId> write_thread(const WriteRef& w) const {
    if (w.is_init()) return std::nullopt;
    return events_[w.buffer_write].thread;
  }
  WriteRef write_ref_of(EventId write_half) const;
  bool rf_is_remote(EventId read) const {
    auto t = write_thread(rf_[read]);
    return !t || *t != events_[read].thread;
  }

  /// Dense slot for write refs: buffer-write ids for real writes, size()+var
  /// for initial writes.
  std::size_t write_slot(const WriteRef& w) const {
    return w.is_init() ? events_.size() + static_cast<std::size_t>(w.var) : w.buffer_write;
  }
  std::size_t num_write_slots() const { return events_.size() + num_vars(); }
  /// Reads whose rf is the given write slot.
  const std::vector<EventId>& readers(std::size_t slot) const { return readers_[slot]; }

  /// Latest memory-write of the read's own thread on the read's variable
  /// whose buffer-write precedes the read in PO (kNoEvent if none).
  EventId last_local_write_before(EventId read) const { return last_local_write_before_[read]; }

  /// Events of atomic block b, in PO order.
  const std::vector<EventId>& block_events(std::int32_t b) const { return blocks_[static_cast<std::size_t>(b)]; }
  std::size_t num_blocks() const { return blocks_.size(); }
  bool block_has_memory_write(std::int32_t b) const;

  /// Source op of an event (thread, op index); kNoEvent-backed virtual fences
  /// report their preceding op.
  OpRef source_op(EventId e) const { return {events_[e].thread, events_[e].op_index}; }
  /// Event id for a source op (the buffer-write for writes).
  EventId event_of_op(const OpRef& op) const;

  /// Human-readable label, e.g. "wB(1.0,x)".
  std::string label(EventId e) const;
  /// Stable string id used in JSON: "t.i" for thread events, "t.i.m" for
  /// memory-writes, "t.i.f" for virtual fences.
  std::string string_id(EventId e) const;

 private:
  MemoryModel model_ = MemoryModel::TSO;
  std::uint32_t num_threads_ = 0;
  std::vector<std::string> var_names_;
  std::vector<Event> events_;
  std::vector<std::vector<EventId>> thread_events_;
  std::vector<std::vector<std::vector<EventId>>> lanes_;
  std::vector<EventId> reads_, buffer_writes_, memory_writes_;
  std::vector<WriteRef> rf_;
  std::vector<std::vector<EventId>> readers_;
  std::vector<EventId> last_local_write_before_;
  std::vector<std::vector<EventId>> blocks_;
  std::vector<std::vector<EventId>> op_events_;  // [thread][op] -> event
};

// ---------------------------------------------------------------------------

/// Program order kept as chains (one per thread's thread events, one per
/// memory-write lane) plus immediate cross-chain predecessors. Lower sets are
/// exactly the vectors of chain-prefix lengths.
class ProgramOrder {
 public:
  explicit ProgramOrder(const Instance& inst);

  const Instance& instance() const { return *inst_; }
  std::size_t num_chains() const { return chain_members_.size(); }
  std::uint32_t chain_of(EventId e) const { return chain_[e]; }
  /// Chain holding the thread events of t.
  std::uint32_t thread_chain(ThreadId t) const { return thread_chain_[t]; }
  std::uint32_t chain_size(std::uint32_t c) const { return static_cast<std::uint32_t>(chain_members_[c].size()); }
  /// Events of chain c in PO order.
  const std::vector<EventId>& chain_members(std::uint32_t c) const { return chain_members_[c]; }
  /// Immediate predecessors (a generating set of PO).
  const std::vector<EventId>& preds(EventId e) const { return preds_[e]; }
  /// Strict PO: a < b.
  bool less(EventId a, EventId b) const { return below_[b].test(a); }
  /// All PO-predecessors of e.
  const Bitset& below(EventId e) const { return below_[e]; }
  bool acyclic() const { return acyclic_; }
  /// A topological order of all events (valid only if acyclic()).
  const std::vector<EventId>& topo_order() const { return topo_; }

 private:
  const Instance* inst_;
  std::vector<std::uint32_t> chain_;
  std::vector<std::vector<EventId>> chain_members_;
  std::vector<std::uint32_t> thread_chain_;
  std::vector<std::vector<EventId>> preds_;
  std::vector<Bitset> below_;
  std::vector<EventId> topo_;
  bool acyclic_ = true;
};

ProgramOrder build_program_order(const Instance& inst);

bool is_lower_set(const std::vector<EventId>& subset, const ProgramOrder& po);
bool is_lower_set(const Bitset& subset, const ProgramOrder& po);

enum class InstanceError {
  VariableMismatch,
  MissingRf,
  RfNotAWrite,
  StaleLocalRF,
  CyclicProgramOrder,
  BlockSpansThreads,
  BlockNotContiguous,
  SharedLockAcquire,
  UnbalancedLock,
  BadJoin,
};

const char* to_string(InstanceError e);

struct InstanceIssue {
  InstanceError error;
  std::vector<EventId> events;
  std::string message;
};

/// Every violated invariant, with the offending event ids. Empty means ok.
std::vector<InstanceIssue> validate_instance(const Instance& inst);

}  // namespace rfsc
