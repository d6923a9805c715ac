#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "rfsc/generator.hpp"
#include "rfsc/oracle.hpp"
#include "rfsc/smc.hpp"

using namespace rfsc;

namespace {

void check_against_oracle(const Program& p, MemoryModel m) {
  ExploreOptions opts;
  opts.collect_classes = true;
  ExploreResult r = explore(p, m, opts);
  std::set<std::string> got(r.classes.begin(), r.classes.end());
  RfClassCount truth = oracle_rf_classes(p, m);
  CHECK(got.size() == r.classes.size());  // no class visited twice
  CHECK(got == truth.classes);
  CHECK(r.stats.classes_explored == truth.classes.size());
  CHECK(r.stats.maximal_traces == r.stats.classes_explored);
}

}  // namespace

TEST_CASE("corpus programs") {
  for (MemoryModel m : {MemoryModel::SC, MemoryModel::TSO, MemoryModel::PSO}) {
    CAPTURE(to_string(m));
    check_against_oracle(parse_program(benchmark_source("store_buffer", 0)), m);
    check_against_oracle(parse_program(benchmark_source("lock2", 0)), m);
    check_against_oracle(parse_program(benchmark_source("fadd2", 0)), m);
    for (std::uint32_t u = 2; u <= 4; ++u) {
      check_against_oracle(parse_program(benchmark_source("floating_read", u)), m);
      check_against_oracle(parse_program(benchmark_source("lastwrite", u)), m);
    }
  }
}

TEST_CASE("class counts") {
  Program sb = parse_program(benchmark_source("store_buffer", 0));
  CHECK(explore(sb, MemoryModel::TSO).stats.classes_explored == 4);
  CHECK(explore(sb, MemoryModel::PSO).stats.classes_explored == 4);
  CHECK(explore(sb, MemoryModel::SC).stats.classes_explored == 3);
  CHECK(explore(parse_program(benchmark_source("fadd2", 0)), MemoryModel::PSO).stats.classes_explored == 2);
  CHECK(explore(parse_program(benchmark_source("lock2", 0)), MemoryModel::TSO).stats.classes_explored == 2);
  for (std::uint32_t u = 3; u <= 6; ++u) {
    CHECK(explore(parse_program(benchmark_source("floating_read", u)), MemoryModel::PSO).stats.classes_explored == u + 1);
    CHECK(explore(parse_program(benchmark_source("lastwrite", u)), MemoryModel::TSO).stats.classes_explored == u);
  }
}

TEST_CASE("the first maximal run lets every read see the initial value") {
  Program sb = parse_program(benchmark_source("store_buffer", 0));
  Machine m(sb, MemoryModel::TSO);
  std::vector<ProgEvent> run = maximal_extension(m);
  std::size_t reads = 0;
  for (const ProgEvent& e : run)
    if (e.kind == EventKind::Read) {
      ++reads;
      REQUIRE(e.rf);
      CHECK(e.rf->init);
    }
  CHECK(reads == 2);
  CHECK(m.enabled().empty());
}

TEST_CASE("closure on or off gives the same classes") {
  Program p = parse_program(benchmark_source("floating_read", 3));
  ExploreOptions on, off;
  on.collect_classes = off.collect_classes = true;
  off.use_closure = false;
  auto a = explore(p, MemoryModel::PSO, on).classes, b = explore(p, MemoryModel::PSO, off).classes;
  CHECK(std::set<std::string>(a.begin(), a.end()) == std::set<std::string>(b.begin(), b.end()));
}

TEST_CASE("random programs") {
  std::mt19937_64 rng(29);
  ProgramGenOptions plain;
  plain.locks = plain.atomics = plain.branches = false;
  ProgramGenOptions all;
  for (int i = 0; i < 120; ++i) {
    std::string src = random_program_source(rng, i % 2 ? all : plain);
    CAPTURE(src);
    Program p = parse_program(src);
    for (MemoryModel m : {MemoryModel::SC, MemoryModel::TSO, MemoryModel::PSO}) check_against_oracle(p, m);
  }
}
