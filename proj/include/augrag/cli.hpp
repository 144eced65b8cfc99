#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace augrag::cli {

/// Exit codes: 0 success, 1 user error (bad flags, bad input files,
/// unreachable or failing model endpoint), 2 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

/// Run one command line (without the program name). `in` feeds the
/// interactive query loop; logs go to `err`.
int execute(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace augrag::cli
