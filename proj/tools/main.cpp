#include <iostream>

#include "fimscore/cli/cli.hpp"

int main(int argc, char** argv) { return fimscore::cli::run(argc, argv, std::cout, std::cerr); }
