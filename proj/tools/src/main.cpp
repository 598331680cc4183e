#include <iostream>

#include "psr_bench/commands.hpp"

int main(int argc, char** argv) {
  return psr::bench::run_cli(argc, argv, std::cout, std::cerr);
}
