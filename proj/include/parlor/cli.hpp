#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace parlor {

// Stable exit codes for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitRuntimeError = 2;

struct CliStreams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool stdin_is_tty = false;
};

// args excludes the program name: {"run", "exp.json", "--golden", ...}
int run_cli(const std::vector<std::string>& args, CliStreams streams);

}  // namespace parlor
