#pragma once

#include "rfsc/verify.hpp"

namespace rfsc {

/// Executability of a single event under the TSO rules: lower set, a remote
/// read needs its source memory-write, a memory-write needs its variable
/// unheld and the earlier same-variable writes of each remote reader's
/// thread flushed. Block membership is not considered.
bool tso_event_executable(EventId e, const Trace& t);

/// Executability of a step starting at e: a single event, or, if e opens an
/// atomic block, the whole block executed in sequence.
bool tso_executable(EventId e, const Trace& t, const ClosureOrder* closure = nullptr);

/// Appends the step starting at e to a copy of t if it is executable.
std::optional<Trace> tso_step(EventId e, const Trace& t, const ClosureOrder* closure = nullptr);

/// Per-thread executed memory-write counts: the visited key.
std::vector<std::uint32_t> tso_visit_key(const Trace& t);

VerifyResult verify_tso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts = {});
VerifyResult naive_verify_tso(const Instance& inst, const ProgramOrder& po, const VerifyOptions& opts = {});

}  // namespace rfsc
