#include <iostream>

#include "nestcast/cli.hpp"

int main(int argc, char** argv) { return nestcast::cli::run(argc, argv, std::cout, std::cerr); }
