#pragma once

namespace apde::cli {

/// Entry point of the `apde` executable; returns the process exit status.
int run_cli(int argc, char** argv);

} // namespace apde::cli
