#pragma once

#include <iosfwd>

namespace spgym {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitConfigError = 2;

/// Entry point of the `spgym` tool. `in` feeds "-" image inputs; "-" outputs go
/// to `out`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace spgym
