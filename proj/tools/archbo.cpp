#include <iostream>

#include "archbo/cli.hpp"

int main(int argc, char** argv) { return archbo::run_cli(argc, argv, std::cout, std::cerr); }
