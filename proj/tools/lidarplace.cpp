#include <iostream>
#include <string>
#include <vector>

#include "lidarplace/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lidarplace::run_cli(args, std::cout, std::cerr);
}
