#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "rfsc/model.hpp"

namespace rfsc {

struct GenOptions {
  std::uint32_t n_max = 10;  // events, both halves of a write counted
  std::uint32_t k_max = 3;
  std::uint32_t d_max = 3;
  MemoryModel model = MemoryModel::TSO;
  /// Chance that a read with a remote candidate takes a remote source.
  double cross_bias = 0.3;
  double fence_prob = 0.15;
  double block_prob = 0.1;  // read-modify-write blocks
};

/// A random proper instance whose rf respects the local-source rule (a read
/// of its own thread's write takes the latest one). Unrealizable ones are
/// produced freely.
InstanceSpec random_instance(std::mt19937_64& rng, const GenOptions& opts);

}  // namespace rfsc

namespace rfsc {

struct ProgramGenOptions {
  std::uint32_t threads_max = 3;
  std::uint32_t statements_max = 3;  // per thread
  bool locks = true;
  bool atomics = true;
  bool branches = true;
};

/// Source text of a small random program over variables x, y and mutex m.
std::string random_program_source(std::mt19937_64& rng, const ProgramGenOptions& opts);

}  // namespace rfsc
