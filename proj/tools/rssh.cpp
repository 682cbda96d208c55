#include <iostream>

#include "rssh/cli.hpp"

int main(int argc, char** argv) { return rssh::cli::run(argc, argv, std::cout, std::cerr); }
