#include <iostream>
#include <string>
#include <vector>

#include "tgcomp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return tgc::cli::run(args, std::cout, std::cerr);
}
