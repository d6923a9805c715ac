#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rfsc/program.hpp"

using namespace rfsc;

namespace {

ProgramErrorKind error_of(const std::string& src) {
  try {
    parse_program(src);
  } catch (const ProgramError& e) {
    return e.kind();
  }
  FAIL("no error for: " << src);
  return ProgramErrorKind::SyntaxError;
}

// Runs random enabled steps until none is left.
Machine random_run(const Program& p, MemoryModel m, std::mt19937_64& rng) {
  Machine mc(p, m);
  for (auto steps = mc.enabled(); !steps.empty(); steps = mc.enabled())
    mc.execute(steps[std::uniform_int_distribution<std::size_t>(0, steps.size() - 1)(rng)]);
  return mc;
}

}  // namespace

TEST_CASE("parsing") {
  Program p = parse_program(
      "# comment\n"
      "var x y\n"
      "mutex m\n"
      "thread a\n"
      "  load r x   # trailing comment\n"
      "  if r == 0 goto done\n"
      "  add r 2\n"
      "  store y r\n"
      "done:\n"
      "  lock m\n"
      "  unlock m\n"
      "thread b\n"
      "  cas s x 0 5\n"
      "  join a\n");
  CHECK(p.num_threads() == 2);
  CHECK(p.num_vars() == 3);
  CHECK(p.is_mutex[2]);
  CHECK(p.threads[0].code.size() == 6);
  CHECK(p.threads[0].code[1].kind == InstrKind::If);
  CHECK(p.threads[0].code[1].target == 4);
  CHECK(p.threads[1].code[0].kind == InstrKind::Cas);
  CHECK(p.is_joined(0));
  CHECK_FALSE(p.is_joined(1));
}

TEST_CASE("parse errors") {
  CHECK(error_of("var x\nthread a\n  store z 1\n") == ProgramErrorKind::UnknownVariable);
  CHECK(error_of("var x\nthread a\nl:\n  store x 1\n  goto l\n") == ProgramErrorKind::BackwardJump);
  CHECK(error_of("var x\nthread a\n  jump x\n") == ProgramErrorKind::SyntaxError);
  CHECK(error_of("var x\nthread a\n  store x\n") == ProgramErrorKind::SyntaxError);
  CHECK(error_of("var x\nthread a\n  goto nowhere\n") == ProgramErrorKind::SyntaxError);
  CHECK(error_of("var x\nmutex m\nthread a\n  lock x\n") == ProgramErrorKind::SyntaxError);
  CHECK(error_of("var x\nthread a\n  join a\n") == ProgramErrorKind::SyntaxError);
  try {
    parse_program("var x\nthread a\n  store x 1\n  load r q\n");
    FAIL("expected an error");
  } catch (const ProgramError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("an empty program has one empty run") {
  Program p = parse_program("var x\n");
  Machine m(p, MemoryModel::TSO);
  CHECK(m.enabled().empty());
}

TEST_CASE("store buffers") {
  Program p = parse_program(benchmark_source("store_buffer", 0));
  SUBCASE("TSO") {
    Machine m(p, MemoryModel::TSO);
    CHECK(m.enabled() == std::vector<Step>{{false, 0, kNoVar}, {false, 1, kNoVar}});
    auto evs = m.execute({false, 0, kNoVar});
    REQUIRE(evs.size() == 1);
    CHECK(evs[0].kind == EventKind::BufferWrite);
    CHECK(m.memory(0) == 0);
    CHECK(m.is_enabled({true, 0, kNoVar}));
    evs = m.execute({false, 0, kNoVar});
    CHECK(evs[0].kind == EventKind::Read);
    CHECK(evs[0].rf->init);
    evs = m.execute({true, 0, kNoVar});
    CHECK(evs[0].kind == EventKind::MemoryWrite);
    CHECK(m.memory(0) == 1);
  }
  SUBCASE("SC: a store's fence waits for the flush") {
    Machine m(p, MemoryModel::SC);
    m.execute({false, 0, kNoVar});
    CHECK(m.next_kind(0) == EventKind::Fence);
    CHECK_FALSE(m.is_enabled({false, 0, kNoVar}));
    m.execute({true, 0, kNoVar});
    CHECK(m.memory(0) == 1);
    CHECK(m.is_enabled({false, 0, kNoVar}));
  }
  SUBCASE("PSO buffers per variable") {
    Program q = parse_program("var x y\nthread a\n  store x 1\n  store y 1\n");
    Machine m(q, MemoryModel::PSO);
    m.execute({false, 0, kNoVar});
    m.execute({false, 0, kNoVar});
    CHECK(m.is_enabled({true, 0, 1}));
    m.execute({true, 0, 1});
    CHECK(m.memory(1) == 1);
    CHECK(m.memory(0) == 0);
  }
}

TEST_CASE("a held lock blocks the other acquire") {
  Program p = parse_program(benchmark_source("lock2", 0));
  for (MemoryModel model : {MemoryModel::SC, MemoryModel::TSO, MemoryModel::PSO}) {
    Machine m(p, model);
    // a lock is a fence followed by the acquire
    m.execute({false, 0, kNoVar});
    m.execute({false, 0, kNoVar});
    m.execute({false, 1, kNoVar});
    CHECK(m.next_kind(1) == EventKind::Read);
    CHECK_FALSE(m.is_enabled({false, 1, kNoVar}));
    while (!m.finished(0) || !m.buffers_empty(0)) {
      bool moved = false;
      for (const Step& s : m.enabled())
        if (s.thread == 0) {
          m.execute(s);
          moved = true;
          break;
        }
      REQUIRE(moved);
    }
    CHECK(m.is_enabled({false, 1, kNoVar}));
  }
}

TEST_CASE("atomic and locked increments never lose an update") {
  std::mt19937_64 rng(1);
  for (const char* name : {"fadd2", "lock2"}) {
    Program p = parse_program(benchmark_source(name, 0));
    for (MemoryModel model : {MemoryModel::SC, MemoryModel::TSO, MemoryModel::PSO})
      for (int i = 0; i < 50; ++i) CHECK(random_run(p, model, rng).memory(0) == 2);
  }
}

TEST_CASE("plain increments can lose one") {
  Program p = parse_program("var x\nthread a\n  load r x\n  add r 1\n  store x r\n"
                            "thread b\n  load r x\n  add r 1\n  store x r\n");
  std::mt19937_64 rng(2);
  bool lost = false;
  for (int i = 0; i < 200; ++i) lost = lost || random_run(p, MemoryModel::SC, rng).memory(0) == 1;
  CHECK(lost);
}

TEST_CASE("assertions and joins") {
  Program p = parse_program("var x\nthread w\n  store x 1\nthread main\n  join w\n  load r x\n  assert r == 1\n");
  std::mt19937_64 rng(4);
  for (MemoryModel model : {MemoryModel::TSO, MemoryModel::PSO})
    for (int i = 0; i < 30; ++i) CHECK(random_run(p, model, rng).assertion_failures() == 0);

  Program q = parse_program("var x\nthread w\n  store x 1\nthread main\n  load r x\n  assert r == 1\n");
  bool failed = false;
  for (int i = 0; i < 50; ++i) failed = failed || random_run(q, MemoryModel::TSO, rng).assertion_failures() > 0;
  CHECK(failed);
}

TEST_CASE("class keys ignore interleaving") {
  Program p = parse_program(benchmark_source("store_buffer", 0));
  auto run = [&](std::vector<Step> steps) {
    Machine m(p, MemoryModel::TSO);
    std::vector<ProgEvent> out;
    for (const Step& s : steps)
      for (auto& e : m.execute(s)) out.push_back(e);
    return rf_class_key(p, out);
  };
  Step t0{false, 0, kNoVar}, t1{false, 1, kNoVar}, f0{true, 0, kNoVar}, f1{true, 1, kNoVar};
  CHECK(run({t0, t0, t1, t1, f0, f1}) == run({t1, t0, t1, t0, f1, f0}));
  CHECK(run({t0, t0, t1, t1, f0, f1}) != run({t0, f0, t1, t1, t0, f1}));
}
