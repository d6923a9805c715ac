#include "rfsc/closure.hpp"

#include <cassert>
#include <stdexcept>

namespace rfsc {

namespace {

struct Cycle {};

class Builder {
 public:
  Builder(const Instance& inst, std::vector<Bitset> before, std::vector<std::pair<EventId, EventId>> extra)
      : inst_(inst), before_(std::move(before)), extra_(std::move(extra)) {
    budget_ = inst.size() * inst.size() + 1;
  }

  bool less(EventId a, EventId b) const { return before_[b].test(a); }

  // Records a < b and everything it implies transitively.
  void order(EventId a, EventId b) {
    if (a == b || less(b, a)) throw Cycle{};
    if (less(a, b)) return;
    if (extra_.size() >= budget_) throw std::logic_error("closure exceeded its edge budget");
    Bitset add = before_[a];
    add.set(a);
    for (EventId x = 0; x < inst_.size(); ++x)
      if (x == b || before_[x].test(b)) before_[x] |= add;
    extra_.emplace_back(a, b);
    changed_ = true;
  }

  bool changed() const { return changed_; }
  void reset_changed() { changed_ = false; }
  std::vector<Bitset> take_before() { return std::move(before_); }
  std::vector<std::pair<EventId, EventId>> take_extra() { return std::move(extra_); }

 private:
  const Instance& inst_;
  std::vector<Bitset> before_;
  std::vector<std::pair<EventId, EventId>> extra_;
  std::size_t budget_;
  bool changed_ = false;
};

void apply_read_rules(const Instance& inst, Builder& b, EventId r) {
  const Event& re = inst.event(r);
  const WriteRef& src = inst.rf(r);
  if (src.var == kNoVar) return;
  const EventId wm = inst.memory_write_of(src);

  // Rule 1: a remote source precedes the read, and the read's own earlier
  // writes to the variable are flushed before the source.
  if (inst.rf_is_remote(r)) {
    if (wm != kNoEvent) b.order(wm, r);
    for (EventId wb : inst.thread_events(re.thread)) {
      if (wb == r) break;
      const Event& w = inst.event(wb);
      if (w.kind != EventKind::BufferWrite || w.var != re.var) continue;
      if (wm == kNoEvent) throw Cycle{};  // would have to precede the initial write
      b.order(w.partner, wm);
    }
  }

  // Rules 2 and 3: another thread's write to the variable may not land
  // between the source and the read.
  for (EventId other : inst.memory_writes()) {
    const Event& o = inst.event(other);
    if (o.thread == re.thread || o.var != re.var || other == wm) continue;
    if (wm == kNoEvent) {
      if (b.less(other, r)) throw Cycle{};
      b.order(r, other);
      continue;
    }
    if (b.less(other, r)) b.order(other, wm);
    if (b.less(wm, other)) b.order(r, other);
  }
}

void apply_block_rules(const Instance& inst, Builder& b, std::int32_t block) {
  const auto& evs = inst.block_events(block);
  if (evs.size() < 2) return;
  const EventId first = evs.front(), last = evs.back();
  std::vector<bool> in_block(inst.size(), false);
  for (EventId e : evs) in_block[e] = true;
  for (EventId e = 0; e < inst.size(); ++e) {
    if (in_block[e]) continue;
    bool after_part = false, before_part = false;
    for (EventId x : evs) {
      after_part |= b.less(x, e);
      before_part |= b.less(e, x);
    }
    if (after_part) b.order(last, e);
    if (before_part) b.order(e, first);
  }
}

std::optional<ClosureOrder> run(const Instance& inst, Builder& b, std::size_t& rounds) {
  try {
    do {
      b.reset_changed();
      ++rounds;
      for (EventId r : inst.reads()) apply_read_rules(inst, b, r);
      for (std::size_t blk = 0; blk < inst.num_blocks(); ++blk)
        apply_block_rules(inst, b, static_cast<std::int32_t>(blk));
    } while (b.changed());
  } catch (const Cycle&) {
    return std::nullopt;
  }
  return ClosureOrder{};
}

}  // namespace

std::optional<ClosureOrder> compute_closure(const Instance& inst, const ProgramOrder& po) {
  if (!po.acyclic()) return std::nullopt;
  std::vector<Bitset> before(inst.size());
  for (EventId e = 0; e < inst.size(); ++e) before[e] = po.below(e);
  Builder b(inst, std::move(before), {});
  std::size_t rounds = 0;
  auto result = run(inst, b, rounds);
  if (!result) return std::nullopt;
  result->po_ = &po;
  result->before_ = b.take_before();
  result->extra_ = b.take_extra();
  result->rounds_ = rounds;
  return result;
}

std::optional<ClosureOrder> close_again(const ClosureOrder& p) {
  const Instance& inst = p.base().instance();
  Builder b(inst, p.before_, p.extra_);
  std::size_t rounds = 0;
  auto result = run(inst, b, rounds);
  if (!result) return std::nullopt;
  result->po_ = p.po_;
  result->before_ = b.take_before();
  result->extra_ = b.take_extra();
  result->rounds_ = rounds;
  return result;
}

bool respects(const std::vector<EventId>& order, const ClosureOrder& p) {
  const std::size_t n = p.base().instance().size();
  std::vector<std::size_t> pos(n, SIZE_MAX);
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (EventId b : order)
    for (auto a = p.before(b).find_first(); a != Bitset::npos; a = p.before(b).find_next(a))
      if (pos[a] != SIZE_MAX && pos[a] > pos[b]) return false;
  return true;
}

}  // namespace rfsc
