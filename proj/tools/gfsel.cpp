#include <iostream>

#include "gfsel/cli.hpp"

int main(int argc, char** argv) { return gfsel::run_cli(argc, argv, std::cout, std::cerr); }
