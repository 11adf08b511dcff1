#pragma once

namespace spfkit {

/// Command-line entry point. Subcommands: rates | calibrate | fit |
/// validate | compare | simulate. Returns 0 on success, 1 on input
/// validation errors, 2 on computation errors, 64 on usage errors.
int run(int argc, const char* const* argv);

}  // namespace spfkit
