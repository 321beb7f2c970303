#include "setopt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return setopt::run_cli(argc, argv, std::cout, std::cerr); }
