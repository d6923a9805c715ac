#include "rfsc/generator.hpp"

#include <algorithm>
#include <string>

namespace rfsc {

InstanceSpec random_instance(std::mt19937_64& rng, const GenOptions& opts) {
  auto uniform = [&rng](std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
  };
  auto chance = [&rng](double p) { return std::bernoulli_distribution(p)(rng); };

  InstanceSpec spec;
  spec.model = opts.model;
  const std::uint32_t k = uniform(1, std::max(1u, opts.k_max));
  const std::uint32_t d = uniform(1, std::max(1u, opts.d_max));
  for (std::uint32_t v = 0; v < d; ++v) spec.var_id(std::string(1, static_cast<char>('x' + v % 3)) + (v >= 3 ? std::to_string(v) : ""));
  spec.threads.assign(k, {});

  const std::uint32_t budget = uniform(std::min(2u, opts.n_max), opts.n_max);
  std::uint32_t used = 0;
  std::int32_t next_block = 0;
  while (used < budget) {
    const ThreadId t = uniform(0, k - 1);
    const VarId v = static_cast<VarId>(uniform(0, d - 1));
    auto& ops = spec.threads[t];
    const std::uint32_t left = budget - used;
    if (left >= 3 && chance(opts.block_prob)) {
      ops.push_back({OpKind::Read, v, next_block, 0});
      ops.push_back({OpKind::Write, v, next_block, 0});
      ++next_block;
      used += 3;
    } else if (chance(opts.fence_prob)) {
      ops.push_back({OpKind::Fence, kNoVar, kNoBlock, 0});
      used += 1;
    } else if (left >= 2 && chance(0.5)) {
      ops.push_back({OpKind::Write, v, kNoBlock, 0});
      used += 2;
    } else {
      ops.push_back({OpKind::Read, v, kNoBlock, 0});
      used += 1;
    }
  }

  for (ThreadId t = 0; t < k; ++t) {
    const auto& ops = spec.threads[t];
    for (std::uint32_t i = 0; i < ops.size(); ++i) {
      if (ops[i].kind != OpKind::Read) continue;
      const VarId v = ops[i].var;
      std::vector<std::optional<OpRef>> local{std::nullopt};  // init
      for (std::uint32_t j = i; j-- > 0;)
        if (ops[j].kind == OpKind::Write && ops[j].var == v) {
          local.push_back(OpRef{t, j});
          break;
        }
      std::vector<std::optional<OpRef>> remote;
      for (ThreadId u = 0; u < k; ++u) {
        if (u == t) continue;
        for (std::uint32_t j = 0; j < spec.threads[u].size(); ++j)
          if (spec.threads[u][j].kind == OpKind::Write && spec.threads[u][j].var == v) remote.push_back(OpRef{u, j});
      }
      const auto& pool = !remote.empty() && chance(opts.cross_bias) ? remote : local;
      spec.rf.push_back({OpRef{t, i}, pool[uniform(0, static_cast<std::uint32_t>(pool.size() - 1))]});
    }
  }
  return spec;
}

}  // namespace rfsc

namespace rfsc {

std::string random_program_source(std::mt19937_64& rng, const ProgramGenOptions& opts) {
  auto uniform = [&rng](std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
  };
  const char* vars[] = {"x", "y"};
  std::string out = "var x y\nmutex m\n";
  const std::uint32_t k = uniform(2, std::max(2u, opts.threads_max));
  int labels = 0;
  for (std::uint32_t t = 0; t < k; ++t) {
    out += "thread t" + std::to_string(t) + "\n";
    const std::uint32_t n = uniform(1, std::max(1u, opts.statements_max));
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::string v = vars[uniform(0, 1)];
      const std::string val = std::to_string(uniform(1, 2));
      switch (uniform(0, 7)) {
        case 0:
        case 1: out += "  store " + v + " " + val + "\n"; break;
        case 2:
        case 3: out += "  load a " + v + "\n"; break;
        case 4: out += "  fence\n"; break;
        case 5:
          if (opts.locks) {
            out += "  lock m\n  load b " + v + "\n  store " + v + " " + val + "\n  unlock m\n";
            break;
          }
          out += "  store " + v + " " + val + "\n";
          break;
        case 6:
          if (opts.atomics) {
            out += uniform(0, 1) ? "  fadd c " + v + " 1\n" : "  cas c " + v + " 0 " + val + "\n";
            break;
          }
          out += "  load a " + v + "\n";
          break;
        default:
          if (opts.branches) {
            const std::string label = "L" + std::to_string(labels++);
            out += "  load d " + v + "\n  if d == 0 goto " + label + "\n  store " + vars[uniform(0, 1)] + " " + val +
                   "\n" + label + ":\n";
            break;
          }
          out += "  store " + v + " " + val + "\n";
          break;
      }
    }
  }
  return out;
}

}  // namespace rfsc
