#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wdsel::cli {

/// Runs one subcommand. Returns 0 on success or the error category's exit
/// code; failures print a single `error kind=... code=... message="..."` line
/// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wdsel::cli
