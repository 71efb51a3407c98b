#include <iostream>
#include <string>
#include <vector>

#include "oag/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return oag::oag_main(args, std::cout, std::cerr);
}
