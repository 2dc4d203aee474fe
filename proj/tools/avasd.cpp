#include <iostream>
#include <string>
#include <vector>

#include "avasd/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return avasd::cli::run(args, std::cout, std::cerr);
}
