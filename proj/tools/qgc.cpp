#include <iostream>

#include "qgc/cli.hpp"

int main(int argc, char** argv) { return qgc::run_cli(argc, argv, std::cout, std::cerr); }
