#include <iostream>

#include "vcas/cli.hpp"

int main(int argc, char** argv) { return vcas::cli::run_cli(argc, argv, std::cout, std::cerr); }
