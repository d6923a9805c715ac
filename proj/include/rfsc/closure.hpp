#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "rfsc/model.hpp"

namespace rfsc {

/// A strict partial order on the events of an instance that refines PO and
/// is closed under the reads-from rules (remote source before its reader,
/// interfering writes kept out of the source..read window) and the two
/// atomic-block rules.
class ClosureOrder {
 public:
  const ProgramOrder& base() const { return *po_; }
  /// a < b in the closure.
  bool less(EventId a, EventId b) const { return before_[b].test(a); }
  /// Every event ordered before e.
  const Bitset& before(EventId e) const { return before_[e]; }
  /// Edges that were not already implied by PO when inserted.
  const std::vector<std::pair<EventId, EventId>>& extra_edges() const { return extra_; }
  /// Number of fixpoint rounds the last computation needed.
  std::size_t rounds() const { return rounds_; }

 private:
  friend std::optional<ClosureOrder> compute_closure(const Instance&, const ProgramOrder&);
  friend std::optional<ClosureOrder> close_again(const ClosureOrder&);

  const ProgramOrder* po_ = nullptr;
  std::vector<Bitset> before_;
  std::vector<std::pair<EventId, EventId>> extra_;
  std::size_t rounds_ = 0;
};

/// The least closed order, or nullopt when the rules force a cycle (the
/// instance is then unrealizable).
std::optional<ClosureOrder> compute_closure(const Instance& inst, const ProgramOrder& po);

/// Runs the fixpoint again starting from an already computed order; used to
/// check idempotence.
std::optional<ClosureOrder> close_again(const ClosureOrder& p);

/// The trace orders its events consistently with p.
bool respects(const std::vector<EventId>& order, const ClosureOrder& p);

}  // namespace rfsc
