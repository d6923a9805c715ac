#include "rfsc/program.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace rfsc {

const char* to_string(ProgramErrorKind k) {
  switch (k) {
    case ProgramErrorKind::SyntaxError: return "SyntaxError";
    case ProgramErrorKind::BackwardJump: return "BackwardJump";
    case ProgramErrorKind::UnknownVariable: return "UnknownVariable";
  }
  return "?";
}

ProgramError::ProgramError(ProgramErrorKind kind, std::size_t line, std::size_t column, const std::string& msg)
    : std::runtime_error(std::string(to_string(kind)) + " at " + std::to_string(line) + ":" + std::to_string(column) +
                         ": " + msg),
      kind_(kind),
      line_(line),
      column_(column) {}

bool Program::is_joined(ThreadId t) const {
  for (const auto& th : threads)
    for (const auto& in : th.code)
      if (in.kind == InstrKind::Join && in.target == t) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  std::string text;
  std::size_t column;
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

bool is_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    long long v = std::stoll(s, &pos, 10);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

const std::map<std::string, Cmp>& cmp_table() {
  static const std::map<std::string, Cmp> t{{"==", Cmp::Eq}, {"!=", Cmp::Ne}, {"<", Cmp::Lt},
                                            {"<=", Cmp::Le}, {">", Cmp::Gt},  {">=", Cmp::Ge}};
  return t;
}

const std::map<std::string, BinOp>& binop_table() {
  static const std::map<std::string, BinOp> t{{"add", BinOp::Add}, {"sub", BinOp::Sub}, {"mul", BinOp::Mul},
                                              {"and", BinOp::And}, {"or", BinOp::Or},   {"xor", BinOp::Xor}};
  return t;
}

class Parser {
 public:
  Program parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      ++lineno_;
      toks_ = tokenize(line);
      pos_ = 0;
      if (toks_.empty()) continue;
      parse_line();
    }
    finish_thread();
    for (const auto& j : joins_) {
      auto it = std::find_if(prog_.threads.begin(), prog_.threads.end(),
                             [&](const ThreadCode& t) { return t.name == j.name; });
      if (it == prog_.threads.end()) throw ProgramError(ProgramErrorKind::SyntaxError, j.line, j.column, "unknown thread '" + j.name + "'");
      auto target = static_cast<std::uint32_t>(it - prog_.threads.begin());
      if (target == j.thread) throw ProgramError(ProgramErrorKind::SyntaxError, j.line, j.column, "a thread cannot join itself");
      prog_.threads[j.thread].code[j.instr].target = target;
    }
    return std::move(prog_);
  }

 private:
  struct PendingJump {
    std::size_t instr;
    std::string label;
    std::size_t line, column;
  };
  struct PendingJoin {
    ThreadId thread;
    std::size_t instr;
    std::string name;
    std::size_t line, column;
  };

  [[noreturn]] void fail(ProgramErrorKind k, const std::string& msg, std::size_t column) const {
    throw ProgramError(k, lineno_, column, msg);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t col = pos_ < toks_.size() ? toks_[pos_].column : (toks_.empty() ? 1 : toks_.back().column);
    fail(ProgramErrorKind::SyntaxError, msg, col);
  }

  const Token& next(const char* what) {
    if (pos_ >= toks_.size()) fail(std::string("expected ") + what);
    return toks_[pos_++];
  }
  void expect_end() {
    if (pos_ < toks_.size()) fail("unexpected '" + toks_[pos_].text + "'");
  }

  VarId global(const Token& t) {
    if (!is_ident(t.text)) fail(ProgramErrorKind::SyntaxError, "expected a variable, got '" + t.text + "'", t.column);
    auto it = std::find(prog_.var_names.begin(), prog_.var_names.end(), t.text);
    if (it == prog_.var_names.end()) fail(ProgramErrorKind::UnknownVariable, "unknown variable '" + t.text + "'", t.column);
    return static_cast<VarId>(it - prog_.var_names.begin());
  }
  VarId shared_var(const Token& t) {
    VarId v = global(t);
    if (prog_.is_mutex[static_cast<std::size_t>(v)]) fail(ProgramErrorKind::SyntaxError, "'" + t.text + "' is a mutex", t.column);
    return v;
  }
  VarId mutex(const Token& t) {
    VarId v = global(t);
    if (!prog_.is_mutex[static_cast<std::size_t>(v)]) fail(ProgramErrorKind::SyntaxError, "'" + t.text + "' is not a mutex", t.column);
    return v;
  }
  std::uint32_t reg(const Token& t) {
    if (!is_ident(t.text)) fail(ProgramErrorKind::SyntaxError, "expected a register, got '" + t.text + "'", t.column);
    if (std::find(prog_.var_names.begin(), prog_.var_names.end(), t.text) != prog_.var_names.end())
      fail(ProgramErrorKind::SyntaxError, "'" + t.text + "' is a shared variable, not a register", t.column);
    auto& regs = current().registers;
    auto it = std::find(regs.begin(), regs.end(), t.text);
    if (it != regs.end()) return static_cast<std::uint32_t>(it - regs.begin());
    regs.push_back(t.text);
    return static_cast<std::uint32_t>(regs.size() - 1);
  }
  Operand operand(const Token& t) {
    if (auto v = parse_int(t.text)) return Operand{false, 0, *v};
    return Operand{true, reg(t), 0};
  }
  Cmp cmp(const Token& t) {
    auto it = cmp_table().find(t.text);
    if (it == cmp_table().end()) fail(ProgramErrorKind::SyntaxError, "expected a comparison, got '" + t.text + "'", t.column);
    return it->second;
  }

  ThreadCode& current() {
    if (!in_thread_) fail("instruction outside a thread");
    return prog_.threads.back();
  }

  void finish_thread() {
    if (!in_thread_) return;
    ThreadCode& th = prog_.threads.back();
    for (const auto& j : jumps_) {
      auto it = labels_.find(j.label);
      if (it == labels_.end()) throw ProgramError(ProgramErrorKind::SyntaxError, j.line, j.column, "undefined label '" + j.label + "'");
      if (it->second <= j.instr)
        throw ProgramError(ProgramErrorKind::BackwardJump, j.line, j.column, "jump to '" + j.label + "' is not forward");
      th.code[j.instr].target = static_cast<std::uint32_t>(it->second);
    }
    jumps_.clear();
    labels_.clear();
    in_thread_ = false;
  }

  void parse_line() {
    const Token& first = toks_[0];
    if (first.text == "var" || first.text == "mutex") {
      if (in_thread_ || !prog_.threads.empty()) fail(ProgramErrorKind::SyntaxError, "declarations must precede threads", first.column);
      pos_ = 1;
      if (pos_ >= toks_.size()) fail("expected a name");
      while (pos_ < toks_.size()) {
        const Token& t = toks_[pos_++];
        if (!is_ident(t.text)) fail(ProgramErrorKind::SyntaxError, "bad name '" + t.text + "'", t.column);
        if (std::find(prog_.var_names.begin(), prog_.var_names.end(), t.text) != prog_.var_names.end())
          fail(ProgramErrorKind::SyntaxError, "duplicate declaration of '" + t.text + "'", t.column);
        prog_.var_names.push_back(t.text);
        prog_.is_mutex.push_back(first.text == "mutex");
      }
      return;
    }
    if (first.text == "thread") {
      finish_thread();
      pos_ = 1;
      const Token& name = next("a thread name");
      if (!is_ident(name.text)) fail(ProgramErrorKind::SyntaxError, "bad thread name '" + name.text + "'", name.column);
      for (const auto& t : prog_.threads)
        if (t.name == name.text) fail(ProgramErrorKind::SyntaxError, "duplicate thread '" + name.text + "'", name.column);
      expect_end();
      prog_.threads.push_back(ThreadCode{name.text, {}, {}});
      in_thread_ = true;
      return;
    }
    if (first.text.size() > 1 && first.text.back() == ':') {
      std::string label = first.text.substr(0, first.text.size() - 1);
      if (!is_ident(label)) fail(ProgramErrorKind::SyntaxError, "bad label '" + label + "'", first.column);
      if (labels_.count(label)) fail(ProgramErrorKind::SyntaxError, "duplicate label '" + label + "'", first.column);
      labels_[label] = current().code.size();
      pos_ = 1;
      if (pos_ == toks_.size()) return;
    }
    parse_instr();
  }

  void parse_instr() {
    const Token& op = next("an instruction");
    Instr in;
    in.line = lineno_;
    const std::string& o = op.text;
    if (o == "store") {
      in.kind = InstrKind::Store;
      in.var = shared_var(next("a variable"));
      in.a = operand(next("a value"));
    } else if (o == "load") {
      in.kind = InstrKind::Load;
      in.reg = reg(next("a register"));
      in.var = shared_var(next("a variable"));
    } else if (o == "fence") {
      in.kind = InstrKind::Fence;
    } else if (o == "lock" || o == "unlock") {
      in.kind = o == "lock" ? InstrKind::Lock : InstrKind::Unlock;
      in.var = mutex(next("a mutex"));
    } else if (o == "set") {
      in.kind = InstrKind::Set;
      in.reg = reg(next("a register"));
      in.a = operand(next("a value"));
    } else if (binop_table().count(o)) {
      in.kind = InstrKind::Binop;
      in.op = binop_table().at(o);
      in.reg = reg(next("a register"));
      in.a = operand(next("a value"));
    } else if (o == "if") {
      in.kind = InstrKind::If;
      in.reg = reg(next("a register"));
      in.cmp = cmp(next("a comparison"));
      in.a = operand(next("a value"));
      const Token& g = next("'goto'");
      if (g.text != "goto") fail(ProgramErrorKind::SyntaxError, "expected 'goto'", g.column);
      const Token& l = next("a label");
      jumps_.push_back({current().code.size(), l.text, lineno_, l.column});
    } else if (o == "goto") {
      in.kind = InstrKind::Goto;
      const Token& l = next("a label");
      jumps_.push_back({current().code.size(), l.text, lineno_, l.column});
    } else if (o == "assert") {
      in.kind = InstrKind::Assert;
      in.reg = reg(next("a register"));
      in.cmp = cmp(next("a comparison"));
      in.a = operand(next("a value"));
    } else if (o == "fadd") {
      in.kind = InstrKind::FetchAdd;
      in.reg = reg(next("a register"));
      in.var = shared_var(next("a variable"));
      in.a = operand(next("a value"));
    } else if (o == "cas") {
      in.kind = InstrKind::Cas;
      in.reg = reg(next("a register"));
      in.var = shared_var(next("a variable"));
      in.a = operand(next("an expected value"));
      in.b = operand(next("a new value"));
    } else if (o == "join") {
      in.kind = InstrKind::Join;
      const Token& name = next("a thread name");
      joins_.push_back({static_cast<ThreadId>(prog_.threads.size() - 1), current().code.size(), name.text, lineno_, name.column});
    } else {
      fail(ProgramErrorKind::SyntaxError, "unknown instruction '" + o + "'", op.column);
    }
    expect_end();
    current().code.push_back(in);
  }

  Program prog_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t lineno_ = 0;
  bool in_thread_ = false;
  std::map<std::string, std::size_t> labels_;
  std::vector<PendingJump> jumps_;
  std::vector<PendingJoin> joins_;
};

}  // namespace

Program parse_program(const std::string& text) { return Parser().parse(text); }

// ---------------------------------------------------------------------------
// Corpus

std::vector<std::string> benchmark_names() { return {"store_buffer", "floating_read", "lastwrite", "lock2", "fadd2"}; }

std::string benchmark_source(const std::string& name, std::uint32_t unroll) {
  std::ostringstream os;
  if (name == "store_buffer") {
    os << "# two threads, each writes one variable and reads the other\n"
       << "var x y\n"
       << "thread t1\n  store x 1\n  load a y\n"
       << "thread t2\n  store y 1\n  load b x\n";
  } else if (name == "floating_read") {
    os << "# " << unroll << " writers race with one reader\n";
    os << "var x\n";
    for (std::uint32_t i = 1; i <= unroll; ++i) os << "thread w" << i << "\n  store x " << i << "\n";
    os << "thread reader\n  load a x\n";
  } else if (name == "lastwrite") {
    os << "# " << unroll << " writers; main joins all of them, then reads\n";
    os << "var x\n";
    for (std::uint32_t i = 1; i <= unroll; ++i) os << "thread w" << i << "\n  store x " << i << "\n";
    os << "thread main\n";
    for (std::uint32_t i = 1; i <= unroll; ++i) os << "  join w" << i << "\n";
    os << "  load a x\n";
  } else if (name == "lock2") {
    os << "# two critical sections incrementing a shared counter\n"
       << "var x\nmutex m\n";
    for (int t = 1; t <= 2; ++t)
      os << "thread t" << t << "\n  lock m\n  load a x\n  add a 1\n  store x a\n  unlock m\n";
  } else if (name == "fadd2") {
    os << "# two fetch-and-add operations on one counter\n"
       << "var x\n"
       << "thread t1\n  fadd a x 1\n"
       << "thread t2\n  fadd b x 1\n";
  } else {
    throw std::invalid_argument("unknown benchmark '" + name + "'");
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Machine

Machine::Machine(const Program& prog, MemoryModel model)
    : prog_(&prog),
      model_(model),
      threads_(prog.num_threads()),
      memory_(prog.num_vars(), 0),
      lock_owner_(prog.num_vars(), -1),
      joined_(prog.num_threads(), false) {
  const std::size_t nbuf = buffer_model() == MemoryModel::PSO ? prog.num_threads() * std::size_t{prog.num_vars()}
                                                                : prog.num_threads();
  buffers_.resize(nbuf);
  for (VarId v = 0; v < static_cast<VarId>(prog.num_vars()); ++v) last_writer_.push_back(ProgWrite::initial(v));
  for (ThreadId t = 0; t < prog.num_threads(); ++t) {
    joined_[t] = prog.is_joined(t);
    threads_[t].regs.assign(prog.threads[t].registers.size(), 0);
    run_local(t);
  }
}

std::deque<Machine::Pending>& Machine::buffer(ThreadId t, VarId v) {
  return buffer_model() == MemoryModel::PSO ? buffers_[t * std::size_t{prog_->num_vars()} + static_cast<std::size_t>(v)]
                                            : buffers_[t];
}
const std::deque<Machine::Pending>& Machine::buffer(ThreadId t, VarId v) const {
  return buffer_model() == MemoryModel::PSO ? buffers_[t * std::size_t{prog_->num_vars()} + static_cast<std::size_t>(v)]
                                            : buffers_[t];
}

std::optional<Machine::Pending> Machine::buffered(ThreadId t, VarId v) const {
  const auto& buf = buffer(t, v);
  for (auto it = buf.rbegin(); it != buf.rend(); ++it)
    if (it->var == v) return *it;
  return std::nullopt;
}

bool Machine::buffers_empty(ThreadId t) const {
  if (buffer_model() == MemoryModel::TSO) return buffers_[t].empty();
  for (VarId v = 0; v < static_cast<VarId>(prog_->num_vars()); ++v)
    if (!buffer(t, v).empty()) return false;
  return true;
}

std::int64_t Machine::eval(ThreadId t, const Operand& o) const { return o.is_reg ? threads_[t].regs[o.reg] : o.value; }

namespace {

bool compare(Cmp c, std::int64_t a, std::int64_t b) {
  switch (c) {
    case Cmp::Eq: return a == b;
    case Cmp::Ne: return a != b;
    case Cmp::Lt: return a < b;
    case Cmp::Le: return a <= b;
    case Cmp::Gt: return a > b;
    case Cmp::Ge: return a >= b;
  }
  return false;
}

std::int64_t apply(BinOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case BinOp::Add: return a + b;
    case BinOp::Sub: return a - b;
    case BinOp::Mul: return a * b;
    case BinOp::And: return a & b;
    case BinOp::Or: return a | b;
    case BinOp::Xor: return a ^ b;
  }
  return 0;
}

}  // namespace

void Machine::run_local(ThreadId t) {
  ThreadState& ts = threads_[t];
  const auto& code = prog_->threads[t].code;
  while (ts.pc < code.size()) {
    const Instr& in = code[ts.pc];
    switch (in.kind) {
      case InstrKind::Set:
        ts.regs[in.reg] = eval(t, in.a);
        ++ts.pc;
        break;
      case InstrKind::Binop:
        ts.regs[in.reg] = apply(in.op, ts.regs[in.reg], eval(t, in.a));
        ++ts.pc;
        break;
      case InstrKind::If:
        ts.pc = compare(in.cmp, ts.regs[in.reg], eval(t, in.a)) ? in.target : ts.pc + 1;
        break;
      case InstrKind::Goto:
        ts.pc = in.target;
        break;
      case InstrKind::Assert:
        if (!compare(in.cmp, ts.regs[in.reg], eval(t, in.a))) ++assert_failures_;
        ++ts.pc;
        break;
      default:
        return;
    }
  }
}

Machine::Next Machine::next_of(ThreadId t) const {
  const ThreadState& ts = threads_[t];
  const auto& code = prog_->threads[t].code;
  if (ts.pc >= code.size()) return joined_[t] && !ts.exit_fence_done ? Next::Fence : Next::None;
  const Instr& in = code[ts.pc];
  switch (in.kind) {
    case InstrKind::Store: return ts.sub == 0 ? Next::Write : Next::Fence;
    case InstrKind::Load: return Next::Read;
    case InstrKind::Fence: return Next::Fence;
    case InstrKind::Lock: return ts.sub == 0 ? Next::Fence : Next::Acquire;
    case InstrKind::Unlock: return ts.sub == 0 ? Next::Fence : Next::Release;
    case InstrKind::FetchAdd:
    case InstrKind::Cas: return ts.sub == 0 ? Next::Fence : Next::Atomic;
    case InstrKind::Join: return Next::Join;
    default: return Next::None;  // local instructions never rest at pc
  }
}

std::optional<EventKind> Machine::next_kind(ThreadId t) const {
  switch (next_of(t)) {
    case Next::None: return std::nullopt;
    case Next::Read:
    case Next::Acquire:
    case Next::Atomic: return EventKind::Read;
    case Next::Write:
    case Next::Release: return EventKind::BufferWrite;
    case Next::Fence: return EventKind::Fence;
    case Next::Join: return EventKind::Join;
  }
  return std::nullopt;
}

bool Machine::finished(ThreadId t) const { return next_of(t) == Next::None; }

bool Machine::is_enabled(const Step& s) const {
  if (s.flush) {
    if (s.thread >= threads_.size()) return false;
    if (buffer_model() == MemoryModel::PSO) return s.var >= 0 && s.var < static_cast<VarId>(prog_->num_vars()) && !buffer(s.thread, s.var).empty();
    return !buffers_[s.thread].empty();
  }
  if (s.thread >= threads_.size()) return false;
  switch (next_of(s.thread)) {
    case Next::None: return false;
    case Next::Fence: return buffers_empty(s.thread);
    case Next::Acquire: {
      const Instr& in = prog_->threads[s.thread].code[threads_[s.thread].pc];
      return lock_owner_[static_cast<std::size_t>(in.var)] < 0;
    }
    case Next::Join: {
      const Instr& in = prog_->threads[s.thread].code[threads_[s.thread].pc];
      return finished(in.target);
    }
    default: return true;
  }
}

std::vector<Step> Machine::enabled() const {
  std::vector<Step> out;
  for (ThreadId t = 0; t < threads_.size(); ++t) {
    Step s{false, t, kNoVar};
    if (is_enabled(s)) out.push_back(s);
  }
  for (ThreadId t = 0; t < threads_.size(); ++t) {
    if (buffer_model() == MemoryModel::PSO) {
      for (VarId v = 0; v < static_cast<VarId>(prog_->num_vars()); ++v)
        if (!buffer(t, v).empty()) out.push_back(Step{true, t, v});
    } else if (!buffers_[t].empty()) {
      out.push_back(Step{true, t, kNoVar});
    }
  }
  return out;
}

ProgEvent Machine::make(ThreadId t, EventKind k, VarId v) {
  ProgEvent e;
  e.thread = t;
  e.index = threads_[t].events++;
  e.kind = k;
  e.var = v;
  return e;
}

std::vector<ProgEvent> Machine::flush(ThreadId t, VarId v) {
  auto& buf = buffer(t, v);
  Pending p = buf.front();
  buf.pop_front();
  memory_[static_cast<std::size_t>(p.var)] = p.value;
  last_writer_[static_cast<std::size_t>(p.var)] = ProgWrite{t, p.index, p.var, false};
  ProgEvent e;
  e.thread = t;
  e.index = p.index;
  e.kind = EventKind::MemoryWrite;
  e.var = p.var;
  e.value = p.value;
  return {e};
}

std::vector<ProgEvent> Machine::execute(const Step& s) {
  if (!is_enabled(s)) throw std::logic_error("step is not enabled");
  if (s.flush) {
    VarId v = s.var;
    if (buffer_model() == MemoryModel::TSO) v = buffers_[s.thread].front().var;
    return flush(s.thread, v);
  }
  const ThreadId t = s.thread;
  ThreadState& ts = threads_[t];
  const auto& code = prog_->threads[t].code;
  const Instr* in = ts.pc < code.size() ? &code[ts.pc] : nullptr;
  std::vector<ProgEvent> out;
  auto done_instr = [&] {
    ++ts.pc;
    ts.sub = 0;
  };
  auto write_now = [&](ProgEvent& wb) {
    memory_[static_cast<std::size_t>(wb.var)] = wb.value;
    last_writer_[static_cast<std::size_t>(wb.var)] = ProgWrite{t, wb.index, wb.var, false};
    ProgEvent wm = wb;
    wm.kind = EventKind::MemoryWrite;
    out.push_back(wb);
    out.push_back(wm);
  };

  switch (next_of(t)) {
    case Next::None:
      break;
    case Next::Fence: {
      out.push_back(make(t, EventKind::Fence, kNoVar));
      if (!in) {
        ts.exit_fence_done = true;
      } else if (in->kind == InstrKind::Fence || in->kind == InstrKind::Store) {
        done_instr();
      } else {
        ts.sub = 1;
      }
      break;
    }
    case Next::Write: {
      ProgEvent wb = make(t, EventKind::BufferWrite, in->var);
      wb.value = eval(t, in->a);
      buffer(t, in->var).push_back(Pending{in->var, wb.value, wb.index});
      out.push_back(wb);
      if (model_ == MemoryModel::SC)
        ts.sub = 1;
      else
        done_instr();
      break;
    }
    case Next::Read: {
      ProgEvent r = make(t, EventKind::Read, in->var);
      if (auto p = buffered(t, in->var)) {
        r.value = p->value;
        r.rf = ProgWrite{t, p->index, in->var, false};
      } else {
        r.value = memory_[static_cast<std::size_t>(in->var)];
        r.rf = last_writer_[static_cast<std::size_t>(in->var)];
      }
      ts.regs[in->reg] = r.value;
      out.push_back(r);
      done_instr();
      break;
    }
    case Next::Acquire: {
      ProgEvent r = make(t, EventKind::Read, in->var);
      r.lock = true;
      r.value = memory_[static_cast<std::size_t>(in->var)];
      r.rf = last_writer_[static_cast<std::size_t>(in->var)];
      lock_owner_[static_cast<std::size_t>(in->var)] = static_cast<std::int32_t>(t);
      out.push_back(r);
      done_instr();
      break;
    }
    case Next::Release: {
      ProgEvent wb = make(t, EventKind::BufferWrite, in->var);
      wb.lock = true;
      wb.value = 0;
      lock_owner_[static_cast<std::size_t>(in->var)] = -1;
      write_now(wb);
      done_instr();
      break;
    }
    case Next::Atomic: {
      ProgEvent r = make(t, EventKind::Read, in->var);
      r.atomic = true;
      r.value = memory_[static_cast<std::size_t>(in->var)];
      r.rf = last_writer_[static_cast<std::size_t>(in->var)];
      ts.regs[in->reg] = r.value;
      bool writes = true;
      std::int64_t nv = 0;
      if (in->kind == InstrKind::FetchAdd) {
        r.rmw_operand = eval(t, in->a);
        nv = r.value + r.rmw_operand;
      } else {
        r.cas = true;
        r.cas_expected = eval(t, in->a);
        r.rmw_operand = eval(t, in->b);
        writes = r.value == r.cas_expected;
        nv = r.rmw_operand;
      }
      out.push_back(r);
      if (writes) {
        ProgEvent wb = make(t, EventKind::BufferWrite, in->var);
        wb.atomic = true;
        wb.value = nv;
        write_now(wb);
      }
      done_instr();
      break;
    }
    case Next::Join: {
      ProgEvent j = make(t, EventKind::Join, kNoVar);
      j.join_target = in->target;
      out.push_back(j);
      done_instr();
      break;
    }
  }
  run_local(t);
  return out;
}

std::string Machine::state_key() const {
  std::string key;
  auto put = [&key](std::int64_t v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
  for (const auto& ts : threads_) {
    put(ts.pc);
    put(ts.sub);
    put(ts.events);
    put(ts.exit_fence_done);
    for (auto r : ts.regs) put(r);
  }
  for (const auto& buf : buffers_) {
    put(static_cast<std::int64_t>(buf.size()));
    for (const auto& p : buf) {
      put(p.var);
      put(p.value);
      put(p.index);
    }
  }
  for (auto m : memory_) put(m);
  for (const auto& w : last_writer_) {
    put(w.init);
    put(w.thread);
    put(w.index);
  }
  for (auto o : lock_owner_) put(o);
  return key;
}

}  // namespace rfsc

namespace rfsc {

std::string rf_class_key(const Program& prog, const std::vector<ProgEvent>& run) {
  std::vector<const ProgEvent*> evs;
  for (const auto& e : run)
    if (e.kind != EventKind::MemoryWrite) evs.push_back(&e);
  std::sort(evs.begin(), evs.end(), [](const ProgEvent* a, const ProgEvent* b) {
    return a->thread != b->thread ? a->thread < b->thread : a->index < b->index;
  });
  std::ostringstream os;
  ThreadId cur = static_cast<ThreadId>(-1);
  for (const ProgEvent* e : evs) {
    if (e->thread != cur) {
      cur = e->thread;
      os << (os.tellp() > 0 ? " | " : "") << prog.threads[cur].name << ":";
    }
    os << ' ' << to_string(e->kind);
    if (e->var != kNoVar) os << '(' << prog.var_names[static_cast<std::size_t>(e->var)] << ')';
    if (e->kind == EventKind::Join) os << '(' << prog.threads[e->join_target].name << ')';
    if (e->rf) {
      os << "<-";
      if (e->rf->init)
        os << "init";
      else
        os << prog.threads[e->rf->thread].name << '.' << e->rf->index;
    }
  }
  return os.str();
}

}  // namespace rfsc
