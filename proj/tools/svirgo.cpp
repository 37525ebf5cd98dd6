#include "svirgo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return svirgo::cli_main(argc, argv, std::cout, std::cerr); }
