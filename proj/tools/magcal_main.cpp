#include "magcal/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return magcal::cli::run(argc, argv, std::cout, std::cerr); }
