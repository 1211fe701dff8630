#include <iostream>

#include "modrl/cli/commands.hpp"

int main(int argc, char** argv) { return modrl::cli::run_cli(argc, argv, std::cout, std::cerr); }
