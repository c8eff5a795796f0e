#include <iostream>

#include "mbdiag/cli.hpp"

int main(int argc, char** argv) {
  return mbdiag::run_cli(argc, argv, std::cout, std::cerr);
}
