#include <iostream>

#include "gravwell/cli.hpp"

int main(int argc, char** argv) { return gravwell::run_cli(argc, argv, std::cout, std::cerr); }
