#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace compforge::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,  // parse, validation, domain, config, annotation, optimization
    kIoFailure = 2,
    kUsage = 64,
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace compforge::cli
