#pragma once

#include <string>
#include <vector>

#include "rfsc/model.hpp"

namespace rfsc {

/// Instance files:
///   {"model": "sc|tso|pso",
///    "vars": ["x", "y"],                      (optional; fixes variable order)
///    "threads": [[{"kind": "write", "var": "x"}, {"kind": "read", "var": "y"}], ...],
///    "rf": [["0.1", "1.0"], ["1.1", "init"]]}
/// Op kinds: read, write, fence, lock_acq, lock_rel, join (with "thread").
/// Any op may carry "block": int. Op ids are "thread.index" strings or
/// [thread, index] pairs. Throws MalformedInstance.
InstanceSpec parse_instance_json(const std::string& text);
InstanceSpec load_instance_file(const std::string& path);
std::string instance_to_json(const InstanceSpec& spec);

/// JSON array of string ids in execution order.
std::string witness_to_json(const Instance& inst, const std::vector<EventId>& order);

}  // namespace rfsc
