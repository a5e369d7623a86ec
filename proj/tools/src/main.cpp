#include <iostream>
#include <string>
#include <vector>

#include "plsivc_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return plsivc::cli::run(args, std::cout, std::cerr);
}
