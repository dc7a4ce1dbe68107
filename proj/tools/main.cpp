#include <iostream>
#include <string>
#include <vector>

#include "nlnde/cli.hpp"
#include "nlnde/log.hpp"

int main(int argc, char** argv) {
  nlnde::log::init_from_env();
  std::vector<std::string> args(argv + 1, argv + argc);
  return nlnde::run_cli(args, std::cout, std::cerr);
}
