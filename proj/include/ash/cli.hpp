#pragma once

namespace ash {

/// Entry point of the `ash` command-line tool. Returns the process exit code.
int run_cli(int argc, char **argv);

}  // namespace ash
