#include <iostream>

#include "spgym/cli.hpp"

int main(int argc, char** argv) { return spgym::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
