#include <iostream>

#include "reluforge/cli.hpp"

int main(int argc, char** argv) { return reluforge::cli::run(argc, argv, std::cout, std::cerr); }
