#pragma once

namespace provico {

/// Full command-line surface; returns the process exit code.
/// Errors print one `error: ...` line to stderr and return 1.
int cli_main(int argc, const char* const* argv);

}  // namespace provico
