// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "rfsc/closure.hpp"
#include "rfsc/generator.hpp"
#include "rfsc/oracle.hpp"
#include "rfsc/smc.hpp"
#include "rfsc/verify.hpp"
#include "support.hpp"

using namespace rfsc;
using namespace rfsc::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

// Complete, well formed, and every read observes its rf.
bool witness_valid(const std::vector<EventId>& w, const Instance& inst, const ProgramOrder& po) {
  if (w.size() != inst.size() || !is_well_formed(w, po)) return false;
  auto observed = rf_of_trace(w, inst, po);
  for (EventId r : inst.reads())
    if (!(observed[r] == inst.rf(r))) return false;
  return true;
}

// Witness counters shared by every criterion that produces witnesses.
std::size_t witnesses_checked = 0, witnesses_bad = 0;

void check_witness(const VerifyResult& r, const Instance& inst, const ProgramOrder& po) {
  if (!r.realizable) return;
  ++witnesses_checked;
  witnesses_bad += !witness_valid(r.witness, inst, po);
}

void store_buffering_matrix() {
  auto t0 = Clock::now();
  struct Row {
    InstanceSpec (*spec)(MemoryModel);
    bool sc, tso, pso;
  };
  std::size_t verdicts = 0, right = 0;
  for (const Row& row : {Row{&realizable_all, true, true, true}, Row{&needs_tso, false, true, true}, Row{&needs_pso, false, false, true}})
    for (auto [m, want] : {std::pair{MemoryModel::SC, row.sc}, {MemoryModel::TSO, row.tso}, {MemoryModel::PSO, row.pso}}) {
      Instance inst = Instance::build(row.spec(m));
      ProgramOrder po = build_program_order(inst);
      for (Algo a : {Algo::Fast, Algo::Naive})
        for (bool cl : {false, true}) {
          VerifyResult r = verify(inst, po, a, cl);
          check_witness(r, inst, po);
          ++verdicts;
          right += r.realizable == want;
        }
    }
  double s = seconds_since(t0);
  report(1, "store-buffering matrix", right == verdicts && verdicts == 36 && s < 1.0,
         std::to_string(right) + "/" + std::to_string(verdicts) + " verdicts, " + std::to_string(s) + "s (limit 1s)");
}

struct SuiteTotals {
  std::size_t instances = 0, disagreements = 0, realizable = 0;
  std::size_t closure_refuted_realizable = 0, witness_outside_closure = 0;
  VerifyChecks pso_checks, tso_checks;
  double seconds = 0;
};

SuiteTotals random_suite() {
  SuiteTotals tot;
  auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  for (MemoryModel m : {MemoryModel::TSO, MemoryModel::PSO}) {
    GenOptions g;
    g.n_max = 10;
    g.k_max = 3;
    g.d_max = 3;
    g.model = m;
    VerifyChecks& checks = m == MemoryModel::PSO ? tot.pso_checks : tot.tso_checks;
    for (int i = 0; i < 1000; ++i) {
      InstanceSpec spec = random_instance(rng, g);
      Instance inst = Instance::build(spec);
      ProgramOrder po = build_program_order(inst);
      ++tot.instances;

      OracleResult o = oracle_realizable(inst, po);
      tot.realizable += o.realizable;
      if (o.realizable) {
        ++witnesses_checked;
        witnesses_bad += !witness_valid(o.witness, inst, po);
      }
      bool agree = true;
      for (Algo a : {Algo::Fast, Algo::Naive})
        for (bool cl : {false, true}) {
          VerifyResult r = verify(inst, po, a, cl, a == Algo::Fast ? &checks : nullptr);
          check_witness(r, inst, po);
          agree = agree && r.realizable == o.realizable;
        }
      tot.disagreements += !agree;

      auto closure = compute_closure(inst, po);
      if (o.realizable && !closure) ++tot.closure_refuted_realizable;
      if (o.realizable && closure && !respects(o.witness, *closure)) ++tot.witness_outside_closure;
    }
  }
  tot.seconds = seconds_since(t0);
  return tot;
}

struct ClassCheck {
  std::size_t programs = 0, mismatches = 0, repeats = 0;
};

void compare_classes(const Program& p, MemoryModel m, ClassCheck& c) {
  ExploreOptions opts;
  opts.collect_classes = true;
  ExploreResult r = explore(p, m, opts);
  std::set<std::string> got(r.classes.begin(), r.classes.end());
  RfClassCount truth = oracle_rf_classes(p, m);
  ++c.programs;
  c.repeats += r.classes.size() - got.size();
  c.mismatches += got != truth.classes || r.stats.classes_explored != truth.classes.size();
}

void optimality() {
  ClassCheck c;
  for (MemoryModel m : {MemoryModel::SC, MemoryModel::TSO, MemoryModel::PSO}) {
    compare_classes(parse_program(benchmark_source("store_buffer", 0)), m, c);
    compare_classes(parse_program(benchmark_source("lock2", 0)), m, c);
    for (std::uint32_t u = 1; u <= 4; ++u) {
      compare_classes(parse_program(benchmark_source("floating_read", u)), m, c);
      compare_classes(parse_program(benchmark_source("lastwrite", u)), m, c);
    }
  }
  report(4, "explored classes equal oracle classes", c.mismatches == 0 && c.repeats == 0,
         std::to_string(c.programs) + " program/model pairs, " + std::to_string(c.mismatches) + " mismatches, " +
             std::to_string(c.repeats) + " repeated classes");
}

void corpus_counts() {
  auto t0 = Clock::now();
  std::size_t runs = 0, wrong = 0;
  std::string first_wrong;
  auto expect = [&](const std::string& name, std::uint32_t u, MemoryModel m, std::size_t want) {
    std::size_t got = explore(parse_program(benchmark_source(name, u)), m).stats.classes_explored;
    ++runs;
    if (got != want) {
      ++wrong;
      if (first_wrong.empty())
        first_wrong = "; " + name + " U=" + std::to_string(u) + " " + to_string(m) + ": " + std::to_string(got) +
                      " != " + std::to_string(want);
    }
  };
  for (MemoryModel m : {MemoryModel::TSO, MemoryModel::PSO}) {
    expect("store_buffer", 0, m, 4);
    for (std::uint32_t u = 3; u <= 7; ++u) expect("floating_read", u, m, u + 1);
    for (std::uint32_t u = 3; u <= 9; ++u) expect("lastwrite", u, m, u);
  }
  double s = seconds_since(t0);
  report(5, "corpus class counts", wrong == 0 && s < 30.0,
         std::to_string(runs - wrong) + "/" + std::to_string(runs) + " exact, " + std::to_string(s) + "s (limit 30s)" +
             first_wrong);
}

}  // namespace

int main() {
  store_buffering_matrix();

  SuiteTotals t = random_suite();
  report(2, "verifiers agree with the oracle", t.disagreements == 0 && t.seconds < 300.0,
         std::to_string(t.instances - t.disagreements) + "/" + std::to_string(t.instances) + " instances agree (" +
             std::to_string(t.realizable) + " realizable), " + std::to_string(t.seconds) + "s (limit 300s)");
  report(3, "closure soundness", t.closure_refuted_realizable == 0 && t.witness_outside_closure == 0,
         std::to_string(t.closure_refuted_realizable) + " realizable instances refuted, " +
             std::to_string(t.witness_outside_closure) + " witnesses outside the closure");

  optimality();
  corpus_counts();

  const VerifyChecks& p = t.pso_checks;
  report(6, "fence-map monotonicity and multiplicity",
         p.fmap_monotone_checks > 0 && p.fmap_monotone_violations == 0 && p.fmap_count_violations == 0,
         std::to_string(p.fmap_monotone_checks) + " monotonicity checks, " + std::to_string(p.fmap_monotone_violations) +
             " violations; max fence maps per key " + std::to_string(p.max_fmaps_per_key) + ", " +
             std::to_string(p.fmap_count_violations) + " over the bound");
  const VerifyChecks& q = t.tso_checks;
  report(7, "state bounds",
         q.tso_bound_checks > 0 && q.tso_bound_violations == 0 && p.fence_free_violations == 0,
         std::to_string(q.tso_bound_checks) + " TSO bound checks, " + std::to_string(q.tso_bound_violations) +
             " violations; " + std::to_string(p.fence_free_violations) + " fence-free keys with several fence maps");

  report(8, "witness validity", witnesses_checked > 0 && witnesses_bad == 0,
         std::to_string(witnesses_checked) + " witnesses, " + std::to_string(witnesses_bad) + " invalid");
  return failures;
}
