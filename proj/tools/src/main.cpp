#include "apde_cli/commands.hpp"

int main(int argc, char** argv)
{
    return apde::cli::run_cli(argc, argv);
}
