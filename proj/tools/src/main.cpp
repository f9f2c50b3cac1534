#include <iostream>
#include <string>
#include <vector>

#include "cloudsample_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cloudsample::cli::run(args, std::cout, std::cerr);
}
