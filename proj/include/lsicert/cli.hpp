#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lsicert::cli {

enum ExitCode : int {
  kPass = 0,
  kUsage = 1,
  kInvalidModel = 2,
  kNoCertificate = 3,
  kVerificationFailed = 4,
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsicert::cli
