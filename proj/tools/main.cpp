#include <iostream>

#include "shadowup/cli.hpp"

int main(int argc, char** argv) { return shadowup::cli::run(argc, argv, std::cout, std::cerr); }
