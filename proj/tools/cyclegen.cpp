#include <iostream>
#include <string>
#include <vector>

#include "cyclegen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cyclegen::run_cli(args, std::cout, std::cerr);
}
