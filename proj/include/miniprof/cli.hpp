#pragma once

namespace miniprof {

// Full command-line front end; separated from main() so tests can drive it
// in-process. Returns the process exit code.
int cli_main(int argc, const char* const* argv);

} // namespace miniprof
