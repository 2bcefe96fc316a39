#pragma once

#include "icf/io.hpp"

namespace icf {

// Runs every property suite and appends one `<suite>: pass|fail` entry per
// suite to the report. Returns true when everything passed. Output is
// byte-deterministic for a given seed.
bool run_selftest(Seed seed, ReportDoc& doc);

}  // namespace icf
