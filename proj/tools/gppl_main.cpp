#include "gppl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gppl::run_cli(argc, argv, std::cout, std::cerr); }
