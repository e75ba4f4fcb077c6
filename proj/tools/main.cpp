#include <iostream>

#include "gnnx/cli/cli.hpp"

int main(int argc, char** argv) { return gnnx::run_cli(argc, argv, std::cout, std::cerr); }
