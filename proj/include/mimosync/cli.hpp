// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace mimosync {

// Full command-line front end. Returns the process exit status:
//   0 success, 2 config/usage error, 3 input/output error,
//   4 numerical failure. Errors print one line to stderr in the form
//   "error: [CODE] message".
int cli_main(int argc, const char* const* argv);

}  // namespace mimosync
