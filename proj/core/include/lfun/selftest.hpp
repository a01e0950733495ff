#pragma once
#include <iosfwd>
#include <string>

namespace lfun {

// Compact invariant suite per module, one report line each.  Deterministic:
// fixed seeds, no timing in the output, so two runs byte-compare equal.
// When form_path is nonempty the forms suite validates that file in place of
// the generated coefficients.  Returns true iff every suite passed.
bool run_selftest(std::ostream &out, const std::string &form_path = {});

}  // namespace lfun
