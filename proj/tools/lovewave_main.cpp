#include <iostream>

#include "lovewave/cli.hpp"

int main(int argc, char** argv) { return lovewave::cli::run(argc, argv, std::cout, std::cerr); }
