#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfsc/model.hpp"
#include "rfsc/program.hpp"

namespace rfsc {

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kOracleEventCap = 14;
inline constexpr std::size_t kOracleStateCap = 2'000'000;

struct OracleResult {
  bool realizable = false;
  std::vector<EventId> witness;
  std::size_t states = 0;
};

/// Exhaustive search over all well-formed traces of the instance (every
/// lower-set extension, atomic blocks as one step, lock acquires only while
/// the lock is free), pruning as soon as a read observes a write other than
/// its rf. Throws CapExceeded if the instance has more than `cap` events.
OracleResult oracle_realizable(const Instance& inst, const ProgramOrder& po, std::size_t cap = kOracleEventCap);

struct RfClassCount {
  std::set<std::string> classes;  // rf_class_key of each maximal run
  std::size_t maximal_runs = 0;   // maximal runs reached (after memoization)
  std::size_t states = 0;
};

/// Every maximal run of the program under the model, grouped by reads-from
/// class. Throws CapExceeded past `state_cap` memoized states.
RfClassCount oracle_rf_classes(const Program& prog, MemoryModel model, std::size_t state_cap = kOracleStateCap);

}  // namespace rfsc
