#pragma once

namespace sns {

// Full command-line driver. Returns the process exit code:
// 0 success, 2 configuration / usage error, 3 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace sns
