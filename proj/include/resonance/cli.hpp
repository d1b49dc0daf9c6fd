#pragma once

namespace resonance {

/// Subcommands check, solve, continuation, sweep and version. Returns 0 on
/// success, 2 when a run ends in norm blowup, 1 on any error.
int run_cli(int argc, char** argv);

}  // namespace resonance
