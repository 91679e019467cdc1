#include <iostream>

#include "mumanifold_cli/cli.hpp"

int main(int argc, char** argv) { return mumanifold::cli::run(argc, argv, std::cout, std::cerr); }
