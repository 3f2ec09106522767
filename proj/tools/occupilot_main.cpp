#include <iostream>

#include "occupilot/cli.hpp"

int main(int argc, char** argv) { return occupilot::cli::run(argc, argv, std::cout, std::cerr); }
