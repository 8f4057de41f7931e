// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "satnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return satnet::cli::run(args, std::cin, std::cout, std::cerr);
}
