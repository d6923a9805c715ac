#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <memory>
#include <string>

#include <json.hpp>

namespace {

const std::string kTool = RFSC_TOOL;
const std::string kData = RFSC_TEST_DATA;

struct Outcome {
  int code;
  std::string out;
};

Outcome run(const std::string& args) {
  std::string cmd = kTool + " " + args + " 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  REQUIRE(pipe);
  std::string out;
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe.get())) out += buf.data();
  int status = pclose(pipe.release());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("verify exit codes") {
  for (const char* model : {"sc", "tso", "pso"}) CHECK(run("verify --model " + std::string(model) + " --input " + kData + "/realizable_all.json").code == 0);
  CHECK(run("verify --model sc --input " + kData + "/needs_tso.json").code == 1);
  CHECK(run("verify --model tso --input " + kData + "/needs_tso.json").code == 0);
  CHECK(run("verify --model tso --input " + kData + "/needs_pso.json").code == 1);
  CHECK(run("verify --model pso --algo naive --closure off --input " + kData + "/needs_pso.json").code == 0);
  CHECK(run("verify --input " + kData + "/bad.json").code == 2);
  CHECK(run("verify --input " + kData + "/missing.json").code == 2);
}

TEST_CASE("verify prints a witness") {
  Outcome o = run("verify --model pso --input " + kData + "/needs_pso.json");
  REQUIRE(o.code == 0);
  auto w = nlohmann::json::parse(o.out);
  REQUIRE(w.is_array());
  CHECK(w.size() == 8);  // 5 thread events + 3 memory-writes
  CHECK(run("verify --model tso --input " + kData + "/needs_pso.json").out == "UNREALIZABLE\n");
}

TEST_CASE("all verifier variants agree") {
  CHECK(run("verify --all-algos --model tso --input " + kData + "/needs_tso.json").code == 0);
  CHECK(run("verify --all-algos --model sc --input " + kData + "/needs_tso.json").code == 1);
}

TEST_CASE("explore and oracle") {
  auto stats = nlohmann::json::parse(run("explore --bench store_buffer --model tso").out);
  CHECK(stats["classes_explored"] == 4);
  auto oracle = nlohmann::json::parse(run("oracle --bench floating_read --unroll 3 --model pso --count-classes").out);
  CHECK(oracle["classes"] == 4);
  CHECK(run("explore --program /nonexistent.prog").code == 2);
}

TEST_CASE("fuzz reports no disagreement") {
  Outcome o = run("fuzz --count 50 --seed 1 --models tso");
  CHECK(o.code == 0);
  CHECK(nlohmann::json::parse(o.out).is_object());
}
