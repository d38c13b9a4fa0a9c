#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return polyvem::cli::run(argc, argv, std::cout, std::cerr); }
