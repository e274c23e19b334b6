#include <unistd.h>

#include <iostream>

#include "parlor/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return parlor::run_cli(args, {std::cin, std::cout, std::cerr, isatty(0) != 0});
}
