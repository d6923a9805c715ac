#include "rfsc/model.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace rfsc {

const char* to_string(MemoryModel m) {
  switch (m) {
    case MemoryModel::SC: return "sc";
    case MemoryModel::TSO: return "tso";
    case MemoryModel::PSO: return "pso";
  }
  return "?";
}

MemoryModel parse_memory_model(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "sc") return MemoryModel::SC;
  if (l == "tso") return MemoryModel::TSO;
  if (l == "pso") return MemoryModel::PSO;
  throw std::invalid_argument("unknown memory model '" + s + "'");
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Read: return "r";
    case EventKind::BufferWrite: return "wB";
    case EventKind::MemoryWrite: return "wM";
    case EventKind::Fence: return "fnc";
    case EventKind::Join: return "join";
  }
  return "?";
}

const char* to_string(InstanceError e) {
  switch (e) {
    case InstanceError::VariableMismatch: return "VariableMismatch";
    case InstanceError::MissingRf: return "MissingRf";
    case InstanceError::RfNotAWrite: return "RfNotAWrite";
    case InstanceError::StaleLocalRF: return "StaleLocalRF";
    case InstanceError::CyclicProgramOrder: return "CyclicProgramOrder";
    case InstanceError::BlockSpansThreads: return "BlockSpansThreads";
    case InstanceError::BlockNotContiguous: return "BlockNotContiguous";
    case InstanceError::SharedLockAcquire: return "SharedLockAcquire";
    case InstanceError::UnbalancedLock: return "UnbalancedLock";
    case InstanceError::BadJoin: return "BadJoin";
  }
  return "?";
}

VarId InstanceSpec::var_id(const std::string& name) {
  auto it = std::find(var_names.begin(), var_names.end(), name);
  if (it != var_names.end()) return static_cast<VarId>(it - var_names.begin());
  var_names.push_back(name);
  return static_cast<VarId>(var_names.size() - 1);
}

namespace {

struct ProtoEvent {
  EventKind kind;
  VarId var;
  std::int32_t user_block;  // kNoBlock or user id; lock releases get synthetic ids
  ThreadId join_target;
  bool lock;
  bool virtual_fence;
  std::uint32_t op_index;
  bool write_in_block;  // memory-write half belongs to the block too
};

}  // namespace

Instance Instance::build(const InstanceSpec& spec) {
  Instance inst;
  inst.model_ = spec.model;
  inst.num_threads_ = static_cast<std::uint32_t>(spec.threads.size());
  inst.var_names_ = spec.var_names;
  const auto nvars = static_cast<VarId>(spec.var_names.size());
  const bool pso = spec.model == MemoryModel::PSO;
  const bool sc = spec.model == MemoryModel::SC;

  // Synthetic block ids for lock releases live above every user id.
  std::int32_t next_synthetic = 0;
  for (const auto& ops : spec.threads)
    for (const auto& op : ops) next_synthetic = std::max(next_synthetic, op.block + 1);

  // Pass 1: thread events per thread, in order.
  std::vector<std::vector<ProtoEvent>> proto(spec.threads.size());
  for (ThreadId t = 0; t < spec.threads.size(); ++t) {
    const auto& ops = spec.threads[t];
    for (std::uint32_t i = 0; i < ops.size(); ++i) {
      const ThreadOp& op = ops[i];
      auto check_var = [&] {
        if (op.var < 0 || op.var >= nvars)
          throw MalformedInstance("thread " + std::to_string(t) + " op " + std::to_string(i) +
                                  ": variable out of range");
      };
      switch (op.kind) {
        case OpKind::Read:
        case OpKind::LockAcquire:
          check_var();
          proto[t].push_back({EventKind::Read, op.var, op.block, 0, op.kind == OpKind::LockAcquire, false, i, false});
          break;
        case OpKind::Write:
          check_var();
          proto[t].push_back({EventKind::BufferWrite, op.var, op.block, 0, false, false, i, op.block != kNoBlock});
          break;
        case OpKind::LockRelease:
          check_var();
          if (op.block != kNoBlock)
            throw MalformedInstance("lock release cannot carry an explicit block");
          proto[t].push_back({EventKind::BufferWrite, op.var, next_synthetic++, 0, true, false, i, true});
          break;
        case OpKind::Fence:
          proto[t].push_back({EventKind::Fence, kNoVar, op.block, 0, false, false, i, false});
          break;
        case OpKind::Join:
          if (op.join_target >= spec.threads.size())
            throw MalformedInstance("join of unknown thread " + std::to_string(op.join_target));
          proto[t].push_back({EventKind::Join, kNoVar, op.block, op.join_target, false, false, i, false});
          break;
      }
      if (sc && op.kind == OpKind::Write && op.block == kNoBlock) {
        // Writes inside a block are flushed immediately and need no fence.
        proto[t].push_back({EventKind::Fence, kNoVar, kNoBlock, 0, false, true, i, false});
      }
    }
  }

  // Pass 2: canonical ids, (thread, lane, index) order.
  const std::uint32_t lanes_per_thread = pso ? static_cast<std::uint32_t>(nvars) : 1u;
  inst.thread_events_.resize(spec.threads.size());
  inst.lanes_.assign(spec.threads.size(), std::vector<std::vector<EventId>>(lanes_per_thread));
  inst.op_events_.resize(spec.threads.size());
  std::map<std::int32_t, std::int32_t> dense_block;
  auto block_id = [&](std::int32_t user) -> std::int32_t {
    if (user == kNoBlock) return kNoBlock;
    auto [it, fresh] = dense_block.emplace(user, static_cast<std::int32_t>(dense_block.size()));
    if (fresh) inst.blocks_.emplace_back();
    return it->second;
  };

  for (ThreadId t = 0; t < proto.size(); ++t) {
    inst.op_events_[t].assign(spec.threads[t].size(), kNoEvent);
    const EventId base = static_cast<EventId>(inst.events_.size());
    // thread events
    std::vector<std::uint32_t> lane_count(lanes_per_thread, 0);
    for (std::uint32_t j = 0; j < proto[t].size(); ++j) {
      const auto& p = proto[t][j];
      Event e;
      e.id = base + j;
      e.thread = t;
      e.kind = p.kind;
      e.var = p.var;
      e.local_index = j;
      e.lane = 0;
      e.block = block_id(p.user_block);
      e.join_target = p.join_target;
      e.lock = p.lock;
      e.virtual_fence = p.virtual_fence;
      e.op_index = p.op_index;
      inst.events_.push_back(e);
      inst.thread_events_[t].push_back(e.id);
      if (!p.virtual_fence) inst.op_events_[t][p.op_index] = e.id;
      if (p.kind == EventKind::BufferWrite) {
        std::uint32_t lane = pso ? static_cast<std::uint32_t>(p.var) : 0u;
        ++lane_count[lane];
      }
    }
    // memory-writes, lane by lane
    std::vector<EventId> lane_base(lanes_per_thread);
    EventId next = static_cast<EventId>(inst.events_.size());
    for (std::uint32_t l = 0; l < lanes_per_thread; ++l) {
      lane_base[l] = next;
      next += lane_count[l];
    }
    inst.events_.resize(next);
    std::vector<std::uint32_t> lane_fill(lanes_per_thread, 0);
    for (std::uint32_t j = 0; j < proto[t].size(); ++j) {
      const auto& p = proto[t][j];
      if (p.kind != EventKind::BufferWrite) continue;
      std::uint32_t l = pso ? static_cast<std::uint32_t>(p.var) : 0u;
      EventId wm = lane_base[l] + lane_fill[l];
      Event e;
      e.id = wm;
      e.thread = t;
      e.kind = EventKind::MemoryWrite;
      e.var = p.var;
      e.local_index = lane_fill[l]++;
      e.lane = l + 1;
      e.block = p.write_in_block ? inst.events_[base + j].block : kNoBlock;
      e.lock = p.lock;
      e.op_index = p.op_index;
      e.partner = base + j;
      inst.events_[wm] = e;
      inst.events_[base + j].partner = wm;
      inst.lanes_[t][l].push_back(wm);
    }
  }

  for (const auto& e : inst.events_) {
    if (e.block != kNoBlock) inst.blocks_[static_cast<std::size_t>(e.block)].push_back(e.id);
    switch (e.kind) {
      case EventKind::Read: inst.reads_.push_back(e.id); break;
      case EventKind::BufferWrite: inst.buffer_writes_.push_back(e.id); break;
      case EventKind::MemoryWrite: inst.memory_writes_.push_back(e.id); break;
      default: break;
    }
  }
  // Block events in PO order: thread events by index, then memory-writes
  // after their buffer-write.
  for (auto& b : inst.blocks_) {
    std::vector<EventId> ordered;
    for (EventId e : b)
      if (inst.events_[e].is_thread_event()) ordered.push_back(e);
    std::sort(ordered.begin(), ordered.end());
    std::vector<EventId> with_mw;
    for (EventId e : ordered) {
      with_mw.push_back(e);
      const Event& ev = inst.events_[e];
      if (ev.kind == EventKind::BufferWrite && inst.events_[ev.partner].block == ev.block)
        with_mw.push_back(ev.partner);
    }
    b = std::move(with_mw);
  }

  // Reads-from.
  const auto n = inst.events_.size();
  inst.rf_.assign(n, WriteRef{});
  for (const auto& entry : spec.rf) {
    auto resolve = [&](const OpRef& r) -> EventId {
      if (r.thread >= spec.threads.size() || r.index >= spec.threads[r.thread].size())
        throw MalformedInstance("rf references unknown op " + std::to_string(r.thread) + "." +
                                std::to_string(r.index));
      return inst.op_events_[r.thread][r.index];
    };
    EventId r = resolve(entry.read);
    if (inst.events_[r].kind != EventKind::Read)
      throw MalformedInstance("rf key " + inst.string_id(r) + " is not a read");
    if (!entry.write) {
      inst.rf_[r] = WriteRef::init(inst.events_[r].var);
    } else {
      EventId w = resolve(*entry.write);
      if (inst.events_[w].kind != EventKind::BufferWrite)
        throw MalformedInstance("rf source " + inst.string_id(w) + " is not a write");
      inst.rf_[r] = WriteRef{w, inst.events_[w].var};
    }
  }

  inst.readers_.assign(inst.num_write_slots(), {});
  for (EventId r : inst.reads_) {
    if (inst.rf_[r].var == kNoVar) continue;
    inst.readers_[inst.write_slot(inst.rf_[r])].push_back(r);
  }

  inst.last_local_write_before_.assign(n, kNoEvent);
  for (ThreadId t = 0; t < inst.num_threads_; ++t) {
    std::vector<EventId> last(static_cast<std::size_t>(nvars), kNoEvent);
    for (EventId e : inst.thread_events_[t]) {
      const Event& ev = inst.events_[e];
      if (ev.kind == EventKind::Read) inst.last_local_write_before_[e] = last[static_cast<std::size_t>(ev.var)];
      if (ev.kind == EventKind::BufferWrite) last[static_cast<std::size_t>(ev.var)] = ev.partner;
    }
  }
  return inst;
}

WriteRef Instance::write_ref_of(EventId write_half) const {
  const Event& e = events_[write_half];
  assert(e.is_write_half());
  EventId wb = e.kind == EventKind::BufferWrite ? e.id : e.partner;
  return WriteRef{wb, e.var};
}

bool Instance::block_has_memory_write(std::int32_t b) const {
  for (EventId e : blocks_[static_cast<std::size_t>(b)])
    if (events_[e].kind == EventKind::MemoryWrite) return true;
  return false;
}

EventId Instance::event_of_op(const OpRef& op) const {
  if (op.thread >= op_events_.size() || op.index >= op_events_[op.thread].size()) return kNoEvent;
  return op_events_[op.thread][op.index];
}

std::string Instance::label(EventId e) const {
  const Event& ev = events_[e];
  std::ostringstream os;
  os << to_string(ev.kind) << "(" << string_id(e);
  if (ev.var != kNoVar) os << "," << var_names_[static_cast<std::size_t>(ev.var)];
  if (ev.kind == EventKind::Join) os << ",t" << ev.join_target;
  os << ")";
  return os.str();
}

std::string Instance::string_id(EventId e) const {
  const Event& ev = events_[e];
  std::string s = std::to_string(ev.thread) + "." + std::to_string(ev.op_index);
  if (ev.kind == EventKind::MemoryWrite) s += ".m";
  if (ev.virtual_fence) s += ".f";
  return s;
}

// ---------------------------------------------------------------------------

ProgramOrder::ProgramOrder(const Instance& inst) : inst_(&inst) {
  const auto n = inst.size();
  chain_.assign(n, 0);
  preds_.assign(n, {});

  // Chains: per thread, its thread events, then each memory lane.
  for (ThreadId t = 0; t < inst.num_threads(); ++t) {
    auto c = static_cast<std::uint32_t>(chain_members_.size());
    thread_chain_.push_back(c);
    chain_members_.push_back(inst.thread_events(t));
    for (EventId e : inst.thread_events(t)) chain_[e] = c;
    for (std::uint32_t l = 1; l <= inst.num_lanes(t); ++l) {
      auto lc = static_cast<std::uint32_t>(chain_members_.size());
      chain_members_.push_back(inst.lane_events(t, l));
      for (EventId e : inst.lane_events(t, l)) chain_[e] = lc;
    }
  }

  for (ThreadId t = 0; t < inst.num_threads(); ++t) {
    const auto& te = inst.thread_events(t);
    // last memory-write per lane whose buffer-write has been seen
    std::vector<EventId> last_mw(inst.num_lanes(t), kNoEvent);
    for (std::size_t i = 0; i < te.size(); ++i) {
      const Event& ev = inst.event(te[i]);
      if (i > 0) preds_[ev.id].push_back(te[i - 1]);
      if (ev.kind == EventKind::Fence) {
        for (EventId wm : last_mw)
          if (wm != kNoEvent) preds_[ev.id].push_back(wm);
      } else if (ev.kind == EventKind::Join) {
        const auto& target = inst.thread_events(ev.join_target);
        if (!target.empty()) preds_[ev.id].push_back(target.back());
      } else if (ev.kind == EventKind::BufferWrite) {
        const Event& wm = inst.event(ev.partner);
        last_mw[wm.lane - 1] = wm.id;
      }
    }
    for (std::uint32_t l = 1; l <= inst.num_lanes(t); ++l) {
      const auto& lane = inst.lane_events(t, l);
      for (std::size_t i = 0; i < lane.size(); ++i) {
        preds_[lane[i]].push_back(inst.event(lane[i]).partner);
        if (i > 0) preds_[lane[i]].push_back(lane[i - 1]);
      }
    }
  }

  // Topological order (Kahn) and transitive predecessor sets.
  std::vector<std::uint32_t> indeg(n, 0);
  std::vector<std::vector<EventId>> succ(n);
  for (EventId e = 0; e < n; ++e)
    for (EventId p : preds_[e]) {
      succ[p].push_back(e);
      ++indeg[e];
    }
  std::vector<EventId> ready;
  for (EventId e = static_cast<EventId>(n); e-- > 0;)
    if (indeg[e] == 0) ready.push_back(e);
  while (!ready.empty()) {
    EventId e = ready.back();
    ready.pop_back();
    topo_.push_back(e);
    for (EventId s : succ[e])
      if (--indeg[s] == 0) ready.push_back(s);
  }
  acyclic_ = topo_.size() == n;
  below_.assign(n, Bitset(n));
  if (acyclic_) {
    for (EventId e : topo_)
      for (EventId p : preds_[e]) {
        below_[e] |= below_[p];
        below_[e].set(p);
      }
  }
}

ProgramOrder build_program_order(const Instance& inst) {
  ProgramOrder po(inst);
  for (EventId wb : inst.buffer_writes()) {
    const Event& b = inst.event(wb);
    const Event& m = inst.event(b.partner);
    if (b.thread != m.thread || b.var != m.var)
      throw MalformedInstance("two-phase write " + inst.string_id(wb) + " spans threads or variables");
  }
  return po;
}

bool is_lower_set(const Bitset& subset, const ProgramOrder& po) {
  for (auto e = subset.find_first(); e != Bitset::npos; e = subset.find_next(e))
    for (EventId p : po.preds(static_cast<EventId>(e)))
      if (!subset.test(p)) return false;
  return true;
}

bool is_lower_set(const std::vector<EventId>& subset, const ProgramOrder& po) {
  Bitset s(po.instance().size());
  for (EventId e : subset) s.set(e);
  return is_lower_set(s, po);
}

// ---------------------------------------------------------------------------

std::vector<InstanceIssue> validate_instance(const Instance& inst) {
  std::vector<InstanceIssue> issues;
  auto report = [&](InstanceError err, std::vector<EventId> evs, std::string msg) {
    issues.push_back({err, std::move(evs), std::move(msg)});
  };

  for (EventId r : inst.reads()) {
    const WriteRef& w = inst.rf(r);
    const Event& re = inst.event(r);
    if (w.var == kNoVar) {
      report(InstanceError::MissingRf, {r}, inst.label(r) + " has no reads-from source");
      continue;
    }
    if (!w.is_init() && inst.event(w.buffer_write).kind != EventKind::BufferWrite) {
      report(InstanceError::RfNotAWrite, {r, w.buffer_write}, "rf source is not a write");
      continue;
    }
    if (w.var != re.var) {
      std::vector<EventId> evs{r};
      if (!w.is_init()) evs.push_back(w.buffer_write);
      report(InstanceError::VariableMismatch, evs, inst.label(r) + " reads a write of another variable");
      continue;
    }
    if (!inst.rf_is_remote(r)) {
      EventId latest = inst.last_local_write_before(r);
      EventId wm = inst.memory_write_of(w);
      if (latest != wm) {
        std::vector<EventId> evs{r, w.buffer_write};
        if (latest != kNoEvent) evs.push_back(inst.event(latest).partner);
        report(InstanceError::StaleLocalRF, evs,
               inst.label(r) + " reads a local write that is not the last one before it");
      }
    }
  }

  for (std::size_t b = 0; b < inst.num_blocks(); ++b) {
    const auto& evs = inst.block_events(static_cast<std::int32_t>(b));
    if (evs.empty()) continue;
    ThreadId t = inst.event(evs.front()).thread;
    bool spans = false;
    for (EventId e : evs) spans |= inst.event(e).thread != t;
    if (spans) {
      report(InstanceError::BlockSpansThreads, evs, "atomic block spans threads");
      continue;
    }
    std::vector<std::uint32_t> idx;
    for (EventId e : evs)
      if (inst.event(e).is_thread_event()) idx.push_back(inst.event(e).local_index);
    for (std::size_t i = 1; i < idx.size(); ++i)
      if (idx[i] != idx[i - 1] + 1) {
        report(InstanceError::BlockNotContiguous, evs, "atomic block is not contiguous in its thread");
        break;
      }
  }

  // Lock discipline: acquire/release alternate per (thread, lock); each
  // release is read by at most one acquire.
  std::vector<std::vector<EventId>> acquirers(inst.num_write_slots());
  for (EventId r : inst.reads())
    if (inst.event(r).lock && inst.rf(r).var != kNoVar) acquirers[inst.write_slot(inst.rf(r))].push_back(r);
  for (const auto& a : acquirers)
    if (a.size() > 1) report(InstanceError::SharedLockAcquire, a, "two lock acquires read the same release");
  for (ThreadId t = 0; t < inst.num_threads(); ++t) {
    std::vector<int> held(inst.num_vars(), 0);
    for (EventId e : inst.thread_events(t)) {
      const Event& ev = inst.event(e);
      if (!ev.lock) continue;
      auto v = static_cast<std::size_t>(ev.var);
      if (ev.kind == EventKind::Read) {
        if (held[v]) report(InstanceError::UnbalancedLock, {e}, "lock acquired twice by " + std::to_string(t));
        held[v] = 1;
      } else if (ev.kind == EventKind::BufferWrite) {
        if (!held[v]) report(InstanceError::UnbalancedLock, {e}, "release of a lock not held");
        held[v] = 0;
      }
    }
  }

  for (EventId e = 0; e < inst.size(); ++e) {
    const Event& ev = inst.event(e);
    if (ev.kind == EventKind::Join && ev.join_target == ev.thread)
      report(InstanceError::BadJoin, {e}, "thread joins itself");
  }

  ProgramOrder po(inst);
  if (!po.acyclic()) report(InstanceError::CyclicProgramOrder, {}, "program order has a cycle (joins)");
  return issues;
}

}  // namespace rfsc
