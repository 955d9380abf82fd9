#include <iostream>

#include "hyperlock/cli.hpp"

int main(int argc, char** argv) { return hyperlock::cli::main(argc, argv, std::cout, std::cerr); }
