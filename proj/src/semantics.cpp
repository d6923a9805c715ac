#include "rfsc/semantics.hpp"

namespace rfsc {

Trace::Trace(const Instance& inst, const ProgramOrder& po)
    : inst_(&inst),
      po_(&po),
      executed_(inst.size()),
      chain_count_(po.num_chains(), 0),
      last_mw_(inst.num_vars(), kNoEvent),
      last_wb_(static_cast<std::size_t>(inst.num_threads()) * inst.num_vars(), kNoEvent),
      observed_(inst.size()),
      remaining_(inst.num_write_slots(), 0) {
  for (EventId r : inst.reads())
    if (inst.rf(r).var != kNoVar) ++remaining_[inst.write_slot(inst.rf(r))];
}

EventId Trace::chain_head(std::uint32_t c) const {
  const auto& members = po_->chain_members(c);
  return chain_count_[c] < members.size() ? members[chain_count_[c]] : kNoEvent;
}

bool Trace::preds_executed(EventId e) const {
  if (executed_.test(e)) return false;
  for (EventId p : po_->preds(e))
    if (!executed_.test(p)) return false;
  return true;
}

void Trace::extend(EventId e) {
  const Event& ev = inst_->event(e);
  if (!preds_executed(e)) throw NotLowerSet("extending with " + inst_->label(e) + " leaves a gap in program order");
  if (open_block_ != kNoBlock && ev.block != open_block_)
    throw AtomicityViolation(inst_->label(e) + " interleaves an atomic block");

  const auto nv = inst_->num_vars();
  switch (ev.kind) {
    case EventKind::Read: {
      EventId wb = last_wb_[ev.thread * nv + static_cast<std::uint32_t>(ev.var)];
      if (wb != kNoEvent)
        observed_[e] = WriteRef{wb, ev.var};
      else
        observed_[e] = last_write_ref(ev.var);
      const WriteRef& want = inst_->rf(e);
      if (want.var != kNoVar) --remaining_[inst_->write_slot(want)];
      break;
    }
    case EventKind::BufferWrite:
      last_wb_[ev.thread * nv + static_cast<std::uint32_t>(ev.var)] = e;
      break;
    case EventKind::MemoryWrite: {
      last_mw_[static_cast<std::size_t>(ev.var)] = e;
      auto& slot = last_wb_[ev.thread * nv + static_cast<std::uint32_t>(ev.var)];
      if (slot == ev.partner) slot = kNoEvent;
      break;
    }
    default:
      break;
  }

  executed_.set(e);
  ++chain_count_[po_->chain_of(e)];
  order_.push_back(e);

  if (ev.block != kNoBlock) {
    if (open_block_ == kNoBlock) {
      open_block_ = ev.block;
      block_left_ = inst_->block_events(ev.block).size();
    }
    if (--block_left_ == 0) open_block_ = kNoBlock;
  }
}

WriteRef Trace::last_write_ref(VarId v) const {
  EventId wm = last_mw_[static_cast<std::size_t>(v)];
  return wm == kNoEvent ? WriteRef::init(v) : WriteRef{inst_->event(wm).partner, v};
}

bool Trace::held(VarId v) const { return remaining_[inst_->write_slot(last_write_ref(v))] > 0; }

std::vector<EventId> Trace::pending_writes(ThreadId t) const {
  std::vector<EventId> out;
  for (std::uint32_t l = 1; l <= inst_->num_lanes(t); ++l) {
    for (EventId wm : inst_->lane_events(t, l)) {
      if (executed_.test(wm)) continue;
      if (!executed_.test(inst_->event(wm).partner)) break;
      out.push_back(wm);
    }
  }
  return out;
}

EventId Trace::buffered_write(ThreadId t, VarId v) const {
  return last_wb_[t * inst_->num_vars() + static_cast<std::uint32_t>(v)];
}

std::vector<WriteRef> rf_of_trace(const std::vector<EventId>& order, const Instance& inst,
                                  const ProgramOrder& po) {
  Trace t(inst, po);
  for (EventId e : order) t.extend(e);
  std::vector<WriteRef> out(inst.size());
  for (EventId e : order)
    if (inst.event(e).kind == EventKind::Read) out[e] = t.observed_rf(e);
  return out;
}

bool is_well_formed(const std::vector<EventId>& order, const ProgramOrder& po) {
  const Instance& inst = po.instance();
  Trace t(inst, po);
  try {
    for (EventId e : order) {
      if (e >= inst.size()) return false;
      t.extend(e);
    }
  } catch (const NotLowerSet&) {
    return false;
  } catch (const AtomicityViolation&) {
    return false;
  }
  return !t.inside_block();
}

bool realizes(const std::vector<EventId>& order, const Instance& inst, const ProgramOrder& po) {
  if (order.size() != inst.size() || !is_well_formed(order, po)) return false;
  auto rf = rf_of_trace(order, inst, po);
  for (EventId r : inst.reads())
    if (!(rf[r] == inst.rf(r))) return false;
  return true;
}

}  // namespace rfsc
