#include <iostream>

#include "diff3f/commands.hpp"

int main(int argc, char** argv) { return diff3f::run_cli(argc, argv, std::cout, std::cerr); }
