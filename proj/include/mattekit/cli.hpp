#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mattekit {

/// Runs one pipeline command. `args` excludes the program name:
///   synth | train | infer | eval | sweep | inspect, followed by flags.
/// Returns 0 on success; errors and usage go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace mattekit
