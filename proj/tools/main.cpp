#include <iostream>

#include "transcp/cli.hpp"

int main(int argc, char** argv) { return transcp::cli_main(argc, argv, std::cout, std::cerr); }
