#ifndef SVTOOL_CLI_HPP
#define SVTOOL_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace sv::cli {

/// Exit codes: 0 success, 1 validation failure, 2 error (error JSON on stderr
/// and in <out>/error.json when an output directory is known).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sv::cli

#endif  // SVTOOL_CLI_HPP
