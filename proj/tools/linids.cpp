#include <iostream>

#include "linids/harness/cli.hpp"

int main(int argc, char** argv) { return linids::harness::run_cli(argc, argv, std::cout, std::cerr); }
