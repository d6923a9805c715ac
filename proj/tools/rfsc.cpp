// Command-line front end: verify, explore, oracle, fuzz, gen-bench.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfsc/closure.hpp"
#include "rfsc/generator.hpp"
#include "rfsc/instance_io.hpp"
#include "rfsc/oracle.hpp"
#include "rfsc/program.hpp"
#include "rfsc/smc.hpp"
#include "rfsc/verify.hpp"

using namespace rfsc;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUnrealizable = 1;
constexpr int kMalformed = 2;
constexpr int kDisagreement = 3;

struct Loaded {
  Instance inst;
  ProgramOrder po;
  explicit Loaded(Instance i) : inst(std::move(i)), po(inst) {}
};

// Loads and validates; prints issues and returns nullptr when malformed.
std::unique_ptr<Loaded> load(const std::string& path, const std::string& model) {
  try {
    InstanceSpec spec = load_instance_file(path);
    if (!model.empty()) spec.model = parse_memory_model(model);
    auto l = std::make_unique<Loaded>(Instance::build(spec));
    auto issues = validate_instance(l->inst);
    if (!issues.empty()) {
      for (const auto& is : issues) std::cerr << to_string(is.error) << ": " << is.message << "\n";
      return nullptr;
    }
    return l;
  } catch (const std::exception& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return nullptr;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json stats_json(const VerifyStats& s) {
  return {{"states", s.states}, {"pops", s.pops}, {"extensions", s.extensions}};
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string model, input, closure = "on", algo = "fast";
  bool all_algos = false, stats = false;
};

int cmd_verify(const VerifyArgs& a) {
  auto l = load(a.input, a.model);
  if (!l) return kMalformed;
  if (a.all_algos) {
    json runs = json::array();
    std::optional<bool> verdict;
    bool agree = true;
    std::vector<EventId> witness;
    for (Algo algo : {Algo::Fast, Algo::Naive})
      for (bool closure : {true, false}) {
        VerifyResult r = verify(l->inst, l->po, algo, closure);
        if (r.realizable && !realizes(r.witness, l->inst, l->po)) agree = false;
        if (verdict && *verdict != r.realizable) agree = false;
        verdict = r.realizable;
        if (r.realizable && witness.empty()) witness = r.witness;
        runs.push_back({{"algo", algo == Algo::Fast ? "fast" : "naive"},
                        {"closure", closure ? "on" : "off"},
                        {"realizable", r.realizable},
                        {"stats", stats_json(r.stats)}});
      }
    if (a.stats) std::cerr << runs.dump() << "\n";
    if (!agree) {
      std::cerr << "verdict disagreement\n";
      std::cout << runs.dump(1) << "\n";
      return kDisagreement;
    }
    if (!*verdict) {
      std::cout << "UNREALIZABLE\n";
      return kUnrealizable;
    }
    std::cout << witness_to_json(l->inst, witness) << "\n";
    return kOk;
  }
  VerifyResult r = verify(l->inst, l->po, a.algo == "naive" ? Algo::Naive : Algo::Fast, a.closure == "on");
  if (a.stats) std::cerr << stats_json(r.stats).dump() << "\n";
  if (!r.realizable) {
    std::cout << "UNREALIZABLE\n";
    return kUnrealizable;
  }
  std::cout << witness_to_json(l->inst, r.witness) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ProgramArgs {
  std::string program, bench;
  std::uint32_t unroll = 3;
};

Program load_program(const ProgramArgs& a) {
  if (!a.bench.empty()) return parse_program(benchmark_source(a.bench, a.unroll));
  if (a.program.empty()) throw std::invalid_argument("need --program or --bench");
  return parse_program(read_file(a.program));
}

struct ExploreArgs {
  ProgramArgs prog;
  std::string model = "tso", dump;
  std::string closure = "on";
  bool stats = false;
};

int cmd_explore(const ExploreArgs& a) {
  Program prog;
  MemoryModel model;
  try {
    prog = load_program(a.prog);
    model = parse_memory_model(a.model);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kMalformed;
  }
  ExploreOptions opts;
  opts.use_closure = a.closure == "on";
  opts.collect_classes = !a.dump.empty();
  ExploreResult r = explore(prog, model, opts);
  json stats{{"classes_explored", r.stats.classes_explored},
             {"maximal_traces", r.stats.maximal_traces},
             {"witness_calls", r.stats.witness_calls},
             {"witness_failures", r.stats.witness_failures},
             {"assertion_failures", r.assertion_failures}};
  if (!a.dump.empty()) {
    std::ofstream out(a.dump);
    out << json(r.classes).dump(1) << "\n";
  }
  if (a.stats) std::cerr << stats.dump() << "\n";
  std::cout << stats.dump() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string input, model;
  ProgramArgs prog;
  bool count_classes = false;
  std::size_t cap = kOracleEventCap;
};

int cmd_oracle(const OracleArgs& a) {
  try {
    if (!a.prog.program.empty() || !a.prog.bench.empty()) {
      Program prog = load_program(a.prog);
      RfClassCount c = oracle_rf_classes(prog, parse_memory_model(a.model.empty() ? "tso" : a.model));
      json out{{"classes", c.classes.size()}, {"maximal_runs", c.maximal_runs}, {"states", c.states}};
      if (!a.count_classes) out["keys"] = c.classes;
      std::cout << out.dump() << "\n";
      return kOk;
    }
    auto l = load(a.input, a.model);
    if (!l) return kMalformed;
    OracleResult r = oracle_realizable(l->inst, l->po, a.cap);
    if (!r.realizable) {
      std::cout << "UNREALIZABLE\n";
      return kUnrealizable;
    }
    std::cout << witness_to_json(l->inst, r.witness) << "\n";
    return kOk;
  } catch (const CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << "\n";
    return kMalformed;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kMalformed;
  }
}

// ---------------------------------------------------------------------------

struct FuzzArgs {
  std::size_t count = 1000;
  std::uint32_t n_max = 10, k_max = 3, d_max = 3;
  std::uint64_t seed = 1;
  std::vector<std::string> models{"tso", "pso"};
  double cross_bias = 0.3;
  bool with_oracle = true, timings = false;
  std::string repro_dir;
};

int cmd_fuzz(const FuzzArgs& a) {
  json report{{"command", "fuzz"},
              {"seed", a.seed},
              {"count", a.count},
              {"n_max", a.n_max},
              {"k_max", a.k_max},
              {"d_max", a.d_max},
              {"cross_bias", a.cross_bias},
              {"with_oracle", a.with_oracle}};
  bool any_disagreement = false;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& mname : a.models) {
    MemoryModel model = parse_memory_model(mname);
    std::mt19937_64 rng(a.seed);
    GenOptions gen;
    gen.n_max = a.n_max;
    gen.k_max = a.k_max;
    gen.d_max = a.d_max;
    gen.model = model;
    gen.cross_bias = a.cross_bias;
    std::size_t realizable = 0, agree = 0;
    json disagreements = json::array();
    const char* names[] = {"fast+closure", "fast", "naive+closure", "naive", "oracle"};
    std::vector<std::size_t> realizable_by(5, 0);
    for (std::size_t i = 0; i < a.count; ++i) {
      InstanceSpec spec = random_instance(rng, gen);
      Instance inst = Instance::build(spec);
      ProgramOrder po(inst);
      std::vector<bool> verdicts;
      bool bad_witness = false;
      for (Algo algo : {Algo::Fast, Algo::Naive})
        for (bool closure : {true, false}) {
          VerifyResult r = verify(inst, po, algo, closure);
          if (r.realizable && !realizes(r.witness, inst, po)) bad_witness = true;
          verdicts.push_back(r.realizable);
        }
      if (a.with_oracle) verdicts.push_back(oracle_realizable(inst, po, std::max<std::size_t>(kOracleEventCap, inst.size())).realizable);
      for (std::size_t j = 0; j < verdicts.size(); ++j) realizable_by[j] += verdicts[j];
      const bool same = std::all_of(verdicts.begin(), verdicts.end(), [&](bool v) { return v == verdicts[0]; });
      if (verdicts[0]) ++realizable;
      if (same && !bad_witness) {
        ++agree;
        continue;
      }
      any_disagreement = true;
      json d{{"index", i}, {"bad_witness", bad_witness}};
      for (std::size_t j = 0; j < verdicts.size(); ++j) d[names[j]] = static_cast<bool>(verdicts[j]);
      if (!a.repro_dir.empty()) {
        std::filesystem::create_directories(a.repro_dir);
        std::string file = a.repro_dir + "/" + mname + "_" + std::to_string(i) + ".json";
        std::ofstream(file) << instance_to_json(spec) << "\n";
        d["repro"] = file;
      }
      disagreements.push_back(d);
    }
    json per{{"instances", a.count},
             {"realizable", realizable},
             {"unrealizable", a.count - realizable},
             {"unrealizable_fraction", a.count ? double(a.count - realizable) / double(a.count) : 0.0},
             {"agreeing", agree},
             {"disagreements", disagreements}};
    json by = json::object();
    for (std::size_t j = 0; j < (a.with_oracle ? 5u : 4u); ++j) by[names[j]] = realizable_by[j];
    per["realizable_by"] = by;
    report["models"][mname] = per;
  }
  if (a.timings)
    report["timings_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  std::cout << report.dump(1) << "\n";
  std::cerr << (any_disagreement ? "fuzz: disagreements found\n" : "fuzz: all verdicts agree\n");
  return any_disagreement ? kDisagreement : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reads-from consistency verification and stateless model checking under SC/TSO/PSO"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Decide whether an instance's reads-from map is realizable");
  verify_cmd->add_option("--model", va.model, "sc, tso or pso (default: the file's model)")
      ->check(CLI::IsMember({"sc", "tso", "pso"}));
  verify_cmd->add_option("--input", va.input, "instance JSON")->required();
  verify_cmd->add_option("--closure", va.closure, "consult the closure order")->check(CLI::IsMember({"on", "off"}));
  verify_cmd->add_option("--algo", va.algo, "fast or naive")->check(CLI::IsMember({"fast", "naive"}));
  verify_cmd->add_flag("--all-algos", va.all_algos, "run fast/naive x closure on/off and compare");
  verify_cmd->add_flag("--stats", va.stats, "search counters as JSON on stderr");

  ExploreArgs ea;
  auto* explore_cmd = app.add_subcommand("explore", "Enumerate the reads-from classes of a program");
  explore_cmd->add_option("--program", ea.prog.program, "program file");
  explore_cmd->add_option("--bench", ea.prog.bench, "built-in benchmark")->check(CLI::IsMember(benchmark_names()));
  explore_cmd->add_option("--unroll", ea.prog.unroll, "benchmark unroll bound");
  explore_cmd->add_option("--model", ea.model, "sc, tso or pso")->check(CLI::IsMember({"sc", "tso", "pso"}));
  explore_cmd->add_option("--closure", ea.closure, "closure pre-pass in the witness checks")
      ->check(CLI::IsMember({"on", "off"}));
  explore_cmd->add_option("--dump-classes", ea.dump, "write the explored class keys as JSON");
  explore_cmd->add_flag("--stats", ea.stats, "statistics on stderr");

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force ground truth");
  oracle_cmd->add_option("--input", oa.input, "instance JSON");
  oracle_cmd->add_option("--program", oa.prog.program, "program file");
  oracle_cmd->add_option("--bench", oa.prog.bench, "built-in benchmark")->check(CLI::IsMember(benchmark_names()));
  oracle_cmd->add_option("--unroll", oa.prog.unroll, "benchmark unroll bound");
  oracle_cmd->add_option("--model", oa.model, "sc, tso or pso")->check(CLI::IsMember({"sc", "tso", "pso"}));
  oracle_cmd->add_option("--cap", oa.cap, "event cap for instances");
  oracle_cmd->add_flag("--count-classes", oa.count_classes, "print only class counts");

  FuzzArgs fa;
  auto* fuzz_cmd = app.add_subcommand("fuzz", "Differential run of all verifiers on random instances");
  fuzz_cmd->add_option("--count", fa.count);
  fuzz_cmd->add_option("--n-max", fa.n_max);
  fuzz_cmd->add_option("--k-max", fa.k_max);
  fuzz_cmd->add_option("--d-max", fa.d_max);
  fuzz_cmd->add_option("--seed", fa.seed);
  fuzz_cmd->add_option("--models", fa.models)->check(CLI::IsMember({"sc", "tso", "pso"}));
  fuzz_cmd->add_option("--cross-bias", fa.cross_bias, "chance a read takes a remote source (default 0.3)");
  fuzz_cmd->add_option("--with-oracle", fa.with_oracle, "include the brute-force oracle (default true)");
  fuzz_cmd->add_option("--repro-dir", fa.repro_dir, "dump disagreeing instances here");
  fuzz_cmd->add_flag("--timings", fa.timings, "add wall-clock time to the report");

  std::string gb_name;
  std::uint32_t gb_unroll = 3;
  auto* gen_cmd = app.add_subcommand("gen-bench", "Print a corpus program");
  gen_cmd->add_option("--name", gb_name)->required()->check(CLI::IsMember(benchmark_names()));
  gen_cmd->add_option("--unroll", gb_unroll);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kMalformed;
  }

  if (*verify_cmd) return cmd_verify(va);
  if (*explore_cmd) return cmd_explore(ea);
  if (*oracle_cmd) return cmd_oracle(oa);
  if (*fuzz_cmd) return cmd_fuzz(fa);
  if (*gen_cmd) {
    std::cout << benchmark_source(gb_name, gb_unroll);
    return kOk;
  }
  return kMalformed;
}
