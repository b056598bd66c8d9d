// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace uatlab::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kSchemaError = 2,
  kShapeError = 3,
};

/// Runs one command line. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uatlab::cli
