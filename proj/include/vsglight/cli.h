#pragma once

namespace vsg {

// Entry point of the `vsglight` tool. Exit codes: 0 success, 1 validation or
// parse failure, 2 numerical failure (non-finite loss, failed grad-check).
int run_cli(int argc, const char* const* argv);

}  // namespace vsg
