#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rfsc/closure.hpp"
#include "rfsc/generator.hpp"
#include "rfsc/oracle.hpp"
#include "support.hpp"

using namespace rfsc;
using namespace rfsc::testing;

TEST_CASE("closure refutes the store-buffering map under SC") {
  Instance inst = Instance::build(needs_tso(MemoryModel::SC));
  ProgramOrder po = build_program_order(inst);
  CHECK_FALSE(compute_closure(inst, po).has_value());

  Instance tso = Instance::build(needs_tso(MemoryModel::TSO));
  ProgramOrder tpo = build_program_order(tso);
  CHECK(compute_closure(tso, tpo).has_value());
}

TEST_CASE("remote source and interfering writes") {
  // thread 0: w(x) w(x); thread 1: r(x) <- first write
  auto spec = make_spec(MemoryModel::TSO, {{wr(0), wr(0)}, {rd(0)}}, {rf(1, 0, 0, 0)}, 1);
  Instance inst = Instance::build(spec);
  ProgramOrder po = build_program_order(inst);
  auto cl = compute_closure(inst, po);
  REQUIRE(cl);
  EventId r = inst.event_of_op({1, 0});
  EventId src = inst.event(inst.event_of_op({0, 0})).partner;
  EventId later = inst.event(inst.event_of_op({0, 1})).partner;
  CHECK(cl->less(src, r));
  CHECK(cl->less(r, later));  // the second write must wait for the read
  CHECK_FALSE(po.less(src, r));
  CHECK_FALSE(cl->extra_edges().empty());
}

TEST_CASE("closure against the independent simulator") {
  std::mt19937_64 rng(11);
  std::size_t refuted = 0;
  for (MemoryModel m : {MemoryModel::SC, MemoryModel::TSO, MemoryModel::PSO}) {
    GenOptions g;
    g.model = m;
    for (int i = 0; i < 300; ++i) {
      InstanceSpec spec = random_instance(rng, g);
      Instance inst = Instance::build(spec);
      ProgramOrder po = build_program_order(inst);
      auto cl = compute_closure(inst, po);
      bool truth = simulate_realizable(spec);
      // sound: never refutes a realizable instance
      if (truth) CHECK(cl.has_value());
      if (!cl) {
        ++refuted;
        continue;
      }
      // idempotent
      auto again = close_again(*cl);
      REQUIRE(again);
      for (EventId e = 0; e < inst.size(); ++e) CHECK(again->before(e) == cl->before(e));
      // every witness respects it
      OracleResult o = oracle_realizable(inst, po);
      CHECK(o.realizable == truth);
      if (o.realizable) CHECK(respects(o.witness, *cl));
    }
  }
  CHECK(refuted > 0);
}
