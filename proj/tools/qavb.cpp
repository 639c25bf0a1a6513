#include <iostream>

#include "qavb/cli.hpp"

int main(int argc, char** argv) { return qavb::cli::main(argc, argv, std::cout, std::cerr); }
