#pragma once

#include <iosfwd>

namespace lovewave::cli {

// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 numerical failure (also returned by `oracle` when the deviation check fails).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lovewave::cli
