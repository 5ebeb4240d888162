#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rsma {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Runs one `rsma` subcommand. args excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rsma
