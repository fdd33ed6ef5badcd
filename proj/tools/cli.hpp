#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dnpg::cli {

/// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

/// Entry point shared by the dnpg binary and the integration tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dnpg::cli
