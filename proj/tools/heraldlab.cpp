#include <iostream>

#include "heraldlab/cli.hpp"

int main(int argc, char** argv) { return heraldlab::cli::run(argc, argv, std::cout, std::cerr); }
