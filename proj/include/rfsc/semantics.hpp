#pragma once

#include <stdexcept>
#include <vector>

#include "rfsc/model.hpp"

namespace rfsc {

class NotLowerSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an event would split an atomic block that is in progress.
class AtomicityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace over the events of an instance, with the machine state the
/// verifiers query: executed set, per-chain prefix counts, last memory-writer
/// per variable, the observed reads-from of executed reads, and how many
/// unexecuted reads still want each write (from the instance's rf).
///
/// The instance and program order must outlive the trace.
class Trace {
 public:
  Trace(const Instance& inst, const ProgramOrder& po);

  const Instance& instance() const { return *inst_; }
  const ProgramOrder& program_order() const { return *po_; }
  const std::vector<EventId>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }
  bool complete() const { return order_.size() == inst_->size(); }

  bool contains(EventId e) const { return executed_.test(e); }
  const Bitset& executed() const { return executed_; }
  /// Executed prefix length of each PO chain; identifies the lower set.
  const std::vector<std::uint32_t>& chain_counts() const { return chain_count_; }
  /// Next unexecuted event of chain c, or kNoEvent.
  EventId chain_head(std::uint32_t c) const;

  /// True iff every PO-predecessor of e is executed (and e is not).
  bool preds_executed(EventId e) const;
  /// True iff an atomic block is partially executed.
  bool inside_block() const { return open_block_ != kNoBlock; }

  /// Appends e. Throws NotLowerSet or AtomicityViolation.
  void extend(EventId e);
  Trace extended(EventId e) const {
    Trace t = *this;
    t.extend(e);
    return t;
  }

  /// Last memory-write on v (kNoEvent: the initial write).
  EventId last_memory_write(VarId v) const { return last_mw_[static_cast<std::size_t>(v)]; }
  WriteRef last_write_ref(VarId v) const;
  /// Reads-from of an executed read as observed in this trace.
  const WriteRef& observed_rf(EventId read) const { return observed_[read]; }
  /// Number of unexecuted reads whose instance rf is the given write slot.
  std::uint32_t remaining_readers(std::size_t slot) const { return remaining_[slot]; }

  /// Variable v is held: its last memory-write still has an unexecuted reader.
  bool held(VarId v) const;
  /// Memory-writes of thread t whose buffer-write is executed but which are
  /// not, in canonical (lane, index) order.
  std::vector<EventId> pending_writes(ThreadId t) const;
  /// The thread's latest executed buffer-write on v whose memory-write is
  /// still pending, or kNoEvent.
  EventId buffered_write(ThreadId t, VarId v) const;

 private:
  const Instance* inst_;
  const ProgramOrder* po_;
  std::vector<EventId> order_;
  Bitset executed_;
  std::vector<std::uint32_t> chain_count_;
  std::vector<EventId> last_mw_;
  std::vector<EventId> last_wb_;  // [thread * vars + var]
  std::vector<WriteRef> observed_;
  std::vector<std::uint32_t> remaining_;
  std::int32_t open_block_ = kNoBlock;
  std::size_t block_left_ = 0;
};

/// Reads-from of every read in `order` (indexed by event id; entries for
/// events that are not executed reads have var == kNoVar). Reads with no
/// buffered local write and no earlier memory-write read the initial write.
/// Throws NotLowerSet / AtomicityViolation if the order is not well formed.
std::vector<WriteRef> rf_of_trace(const std::vector<EventId>& order, const Instance& inst,
                                  const ProgramOrder& po);

/// No duplicates, every prefix a lower set of PO, atomic blocks contiguous.
bool is_well_formed(const std::vector<EventId>& order, const ProgramOrder& po);

/// Complete, well formed, and its reads-from equals the instance's rf.
bool realizes(const std::vector<EventId>& order, const Instance& inst, const ProgramOrder& po);

}  // namespace rfsc
