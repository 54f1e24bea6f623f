#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace plumewatch {

// Exit codes: 0 ok, 1 validation / usage, 2 I/O.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plumewatch
