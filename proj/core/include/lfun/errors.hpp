#pragma once
#include <stdexcept>
#include <string>

namespace lfun {

// Exit-code contract for the CLI: 0 success, 1 selftest failure,
// 2 invalid input (file, schema, parameters), 3 numerical failure
// (non-convergence, evaluation-point selection failure, overflow).
enum class errc : int {
  ok = 0,
  selftest_failed = 1,
  invalid_input = 2,
  numerical_failure = 3,
};

struct lfun_error : std::runtime_error {
  errc code;
  lfun_error(errc c, const std::string &msg) : std::runtime_error(msg), code(c) {}
};

struct input_error : lfun_error {
  explicit input_error(const std::string &msg) : lfun_error(errc::invalid_input, msg) {}
};

struct numerical_error : lfun_error {
  explicit numerical_error(const std::string &msg) : lfun_error(errc::numerical_failure, msg) {}
};

// thrown when no admissible auxiliary evaluation point meets the
// magnitude threshold (Maass L-value preprocessing)
struct selection_failure : numerical_error {
  explicit selection_failure(const std::string &msg) : numerical_error(msg) {}
};

} // namespace lfun
