#include <iostream>
#include <string>
#include <vector>

#include "readlens/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return readlens::run_cli(args, std::cout, std::cerr);
}
