#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rfsc/generator.hpp"
#include "rfsc/verify_tso.hpp"
#include "support.hpp"

using namespace rfsc;
using namespace rfsc::testing;

namespace {

struct Fixture {
  Instance inst;
  ProgramOrder po;
  explicit Fixture(const InstanceSpec& s) : inst(Instance::build(s)), po(build_program_order(inst)) {}
  EventId op(ThreadId t, std::uint32_t i) const { return inst.event_of_op({t, i}); }
  EventId mw(ThreadId t, std::uint32_t i) const { return inst.event(op(t, i)).partner; }
  Trace run(const std::vector<EventId>& order) const {
    Trace t(inst, po);
    for (EventId e : order) t.extend(e);
    return t;
  }
};

}  // namespace

TEST_CASE("read executability") {
  // thread 0: r1(x) r2(x); thread 1: r3(y); thread 2: w1(x) w2(y) r4(y)
  auto spec = make_spec(MemoryModel::TSO, {{rd(0), rd(0)}, {rd(1)}, {wr(0), wr(1), rd(1)}},
                        {rf(0, 0, 2, 0), rf(0, 1, 2, 0), rf(1, 0, 2, 1), rf(2, 2, 2, 1)});
  Fixture f(spec);
  Trace t = f.run({f.op(2, 0), f.op(2, 1), f.mw(2, 0)});
  CHECK(tso_executable(f.op(0, 0), t));   // its source is in memory
  CHECK(tso_executable(f.op(2, 2), t));   // local source, buffered
  CHECK_FALSE(tso_executable(f.op(0, 1), t));  // r1 comes first
  CHECK_FALSE(tso_executable(f.op(1, 0), t));  // w2 not flushed yet
}

TEST_CASE("memory-write executability") {
  // thread 0: w1(x) w2(y); thread 1: r1(x) r2(y) w3(z) r3(z);
  // threads 2..4: w4(x), w5(y), w6(z)
  auto spec = make_spec(MemoryModel::TSO,
                        {{wr(0), wr(1)}, {rd(0), rd(1), wr(2), rd(2)}, {wr(0)}, {wr(1)}, {wr(2)}},
                        {rf(1, 0, 0, 0), rf(1, 1, 0, 1), rf(1, 3, 4, 0)}, 3);
  Fixture f(spec);
  Trace t = f.run({f.op(0, 0), f.op(0, 1), f.mw(0, 0), f.mw(0, 1), f.op(1, 0), f.op(2, 0), f.op(3, 0),
                   f.op(4, 0)});
  CHECK(tso_executable(f.mw(2, 0), t));        // x is free again
  CHECK_FALSE(tso_executable(f.mw(1, 2), t));  // its buffer-write has not run
  CHECK_FALSE(tso_executable(f.mw(3, 0), t));  // y is held until r2 runs
  CHECK_FALSE(tso_executable(f.mw(4, 0), t));  // r3's thread must flush w3 first
}

TEST_CASE("store buffering across models") {
  for (auto [spec_of, sc, tso] : {std::tuple{&realizable_all, true, true}, {&needs_tso, false, true}, {&needs_pso, false, false}}) {
    for (auto [m, want] : {std::pair{MemoryModel::SC, sc}, {MemoryModel::TSO, tso}}) {
      Fixture f(spec_of(m));
      for (Algo a : {Algo::Fast, Algo::Naive})
        for (bool cl : {false, true}) {
          VerifyResult r = verify(f.inst, f.po, a, cl);
          CHECK(r.realizable == want);
          if (r.realizable) CHECK(realizes(r.witness, f.inst, f.po));
        }
    }
  }
}

TEST_CASE("fast, naive and the simulator agree") {
  std::mt19937_64 rng(3);
  std::size_t yes = 0, no = 0;
  for (MemoryModel m : {MemoryModel::SC, MemoryModel::TSO}) {
    GenOptions g;
    g.model = m;
    for (int i = 0; i < 400; ++i) {
      InstanceSpec spec = random_instance(rng, g);
      Fixture f(spec);
      bool truth = simulate_realizable(spec);
      (truth ? yes : no)++;
      VerifyChecks checks;
      VerifyResult fast = verify_tso(f.inst, f.po, {nullptr, &checks});
      VerifyResult naive = naive_verify_tso(f.inst, f.po);
      CHECK(fast.realizable == truth);
      CHECK(naive.realizable == truth);
      if (fast.realizable) CHECK(realizes(fast.witness, f.inst, f.po));
      if (naive.realizable) CHECK(realizes(naive.witness, f.inst, f.po));
      CHECK(checks.tso_bound_violations == 0);
      CHECK(checks.maximality_violations == 0);
    }
  }
  // the generator must exercise both answers
  CHECK(yes > 50);
  CHECK(no > 50);
}

TEST_CASE("visited states stay within the per-thread flush-count bound") {
  auto spec = make_spec(MemoryModel::TSO, {{wr(0), wr(0), wr(1), rd(1)}, {wr(1), wr(0), rd(0)}},
                        {rf(0, 3, 0, 2), rf(1, 2, 0, 1)});
  Fixture f(spec);
  VerifyChecks checks;
  verify_tso(f.inst, f.po, {nullptr, &checks});
  CHECK(checks.tso_bound_checks > 0);
  CHECK(checks.tso_bound_violations == 0);
  Trace t = f.run({f.op(0, 0), f.mw(0, 0)});
  CHECK(tso_visit_key(t) == std::vector<std::uint32_t>{1, 0});
}
