#pragma once

namespace infotime::cli {

/// Entry point behind main(): parses argv, runs one subcommand.
/// Exit codes: 0 success, 1 run failure, 2 configuration/usage error.
int dispatch(int argc, const char* const* argv);

} // namespace infotime::cli
