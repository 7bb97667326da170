#include "iprior/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return iprior::run_cli(argc, argv, std::cout, std::cerr); }
