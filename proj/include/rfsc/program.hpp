#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfsc/model.hpp"

namespace rfsc {

// ---------------------------------------------------------------------------
// Program text

enum class ProgramErrorKind { SyntaxError, BackwardJump, UnknownVariable };

const char* to_string(ProgramErrorKind k);

class ProgramError : public std::runtime_error {
 public:
  ProgramError(ProgramErrorKind kind, std::size_t line, std::size_t column, const std::string& msg);
  ProgramErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  ProgramErrorKind kind_;
  std::size_t line_, column_;
};

enum class Cmp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class BinOp : std::uint8_t { Add, Sub, Mul, And, Or, Xor };

struct Operand {
  bool is_reg = false;
  std::uint32_t reg = 0;
  std::int64_t value = 0;
};

enum class InstrKind : std::uint8_t {
  Store,   // var <- operand
  Load,    // reg <- var
  Fence,
  Lock,
  Unlock,
  Set,     // reg <- operand
  Binop,   // reg <- reg op operand
  If,      // if reg cmp operand goto target
  Goto,
  Assert,  // reg cmp operand
  FetchAdd,  // reg <- var; var <- reg + operand
  Cas,       // reg <- var; if reg == operand then var <- operand2
  Join,
};

struct Instr {
  InstrKind kind = InstrKind::Fence;
  std::uint32_t reg = 0;
  VarId var = kNoVar;
  Operand a, b;
  Cmp cmp = Cmp::Eq;
  BinOp op = BinOp::Add;
  std::uint32_t target = 0;  // instruction index for If/Goto; thread for Join
  std::size_t line = 0;
};

struct ThreadCode {
  std::string name;
  std::vector<Instr> code;
  std::vector<std::string> registers;
};

struct Program {
  std::vector<std::string> var_names;
  std::vector<bool> is_mutex;
  std::vector<ThreadCode> threads;

  std::uint32_t num_threads() const { return static_cast<std::uint32_t>(threads.size()); }
  std::uint32_t num_vars() const { return static_cast<std::uint32_t>(var_names.size()); }
  /// Some thread joins t (t then ends with an exit fence).
  bool is_joined(ThreadId t) const;
};

Program parse_program(const std::string& text);

// ---------------------------------------------------------------------------
// Benchmark corpus

/// Names: store_buffer, floating_read, lastwrite, lock2, fadd2. The unroll bound is
/// ignored by the fixed-size ones.
std::string benchmark_source(const std::string& name, std::uint32_t unroll);
std::vector<std::string> benchmark_names();

// ---------------------------------------------------------------------------
// Machine

/// A write as the explorer names it: thread and thread-event index of the
/// buffer-write, or the initial write of a variable.
struct ProgWrite {
  ThreadId thread = 0;
  std::uint32_t index = 0;
  VarId var = kNoVar;
  bool init = false;

  static ProgWrite initial(VarId v) { return {0, 0, v, true}; }
  friend bool operator==(const ProgWrite& a, const ProgWrite& b) {
    if (a.init != b.init || a.var != b.var) return false;
    return a.init || (a.thread == b.thread && a.index == b.index);
  }
  friend bool operator<(const ProgWrite& a, const ProgWrite& b) {
    if (a.init != b.init) return a.init > b.init;  // initial writes first
    if (a.var != b.var) return a.var < b.var;
    if (a.init) return false;
    return a.thread != b.thread ? a.thread < b.thread : a.index < b.index;
  }
};

/// One event of a program run. Thread events are numbered per thread in
/// program order; a memory-write carries the index of its buffer-write.
struct ProgEvent {
  ThreadId thread = 0;
  std::uint32_t index = 0;
  EventKind kind = EventKind::Fence;
  VarId var = kNoVar;
  std::int64_t value = 0;          // value written or read
  bool lock = false;               // acquire read / release write
  bool atomic = false;             // read or write part of an RMW/CAS step
  bool cas = false;                // read part of a CAS
  std::int64_t cas_expected = 0;
  std::int64_t rmw_operand = 0;    // read part of an RMW: addend; of a CAS: the new value
  ThreadId join_target = 0;
  std::optional<ProgWrite> rf;     // for reads: where the value came from

  bool same_event(const ProgEvent& o) const {
    return thread == o.thread && index == o.index && (kind == EventKind::MemoryWrite) == (o.kind == EventKind::MemoryWrite);
  }
};

/// Canonical reads-from class of a run: its thread events per thread, each
/// read annotated with the write it read from. Two maximal runs share a key
/// iff they have the same events and the same reads-from map.
std::string rf_class_key(const Program& prog, const std::vector<ProgEvent>& run);

/// A step the machine can take: the next instruction-level step of a thread
/// (one thread event, or a whole atomic step), or flushing the oldest entry
/// of a store buffer (a thread's buffer under TSO, a (thread, variable)
/// buffer under PSO).
struct Step {
  bool flush = false;
  ThreadId thread = 0;
  VarId var = kNoVar;  // buffer of a PSO flush
  friend bool operator==(const Step&, const Step&) = default;
};

/// Operational TSO/PSO machine over a program. SC runs the TSO machine with
/// a fence compiled after every plain store.
class Machine {
 public:
  Machine(const Program& prog, MemoryModel model);

  const Program& program() const { return *prog_; }
  MemoryModel model() const { return model_; }
  MemoryModel buffer_model() const { return model_ == MemoryModel::PSO ? MemoryModel::PSO : MemoryModel::TSO; }

  std::vector<Step> enabled() const;
  bool is_enabled(const Step& s) const;
  /// Executes s, returning the events it produced (an atomic step produces
  /// read, buffer-write and memory-write at once).
  std::vector<ProgEvent> execute(const Step& s);

  /// Kind of the next thread event of t, if t can still produce one.
  std::optional<EventKind> next_kind(ThreadId t) const;
  std::uint32_t thread_event_count(ThreadId t) const { return threads_[t].events; }
  bool finished(ThreadId t) const;
  bool buffers_empty(ThreadId t) const;
  std::int64_t memory(VarId v) const { return memory_[static_cast<std::size_t>(v)]; }
  std::int64_t reg(ThreadId t, std::uint32_t r) const { return threads_[t].regs[r]; }
  std::size_t assertion_failures() const { return assert_failures_; }

  /// Serialization of the complete machine state.
  std::string state_key() const;

 private:
  struct Pending {
    VarId var;
    std::int64_t value;
    std::uint32_t index;
  };
  struct ThreadState {
    std::uint32_t pc = 0;
    std::uint32_t sub = 0;  // position inside a multi-event instruction
    std::uint32_t events = 0;
    bool exit_fence_done = false;
    std::vector<std::int64_t> regs;
  };
  enum class Next { None, Read, Write, Fence, Acquire, Release, Atomic, Join };

  Next next_of(ThreadId t) const;
  void run_local(ThreadId t);
  std::int64_t eval(ThreadId t, const Operand& o) const;
  std::deque<Pending>& buffer(ThreadId t, VarId v);
  const std::deque<Pending>& buffer(ThreadId t, VarId v) const;
  std::optional<Pending> buffered(ThreadId t, VarId v) const;
  ProgEvent make(ThreadId t, EventKind k, VarId v);
  std::vector<ProgEvent> flush(ThreadId t, VarId v);

  const Program* prog_;
  MemoryModel model_;
  std::vector<ThreadState> threads_;
  std::vector<std::deque<Pending>> buffers_;  // TSO: per thread; PSO: per (thread, var)
  std::vector<std::int64_t> memory_;
  std::vector<ProgWrite> last_writer_;
  std::vector<std::int32_t> lock_owner_;
  std::vector<bool> joined_;
  std::size_t assert_failures_ = 0;
};

}  // namespace rfsc
