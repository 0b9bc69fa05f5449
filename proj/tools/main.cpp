#include <iostream>

#include "edp/cli.hpp"

int main(int argc, char** argv) { return edp::cli::run_cli(argc, argv, std::cout, std::cerr); }
