#include <iostream>

#include "parfid/cli.hpp"

int main(int argc, char** argv) {
  return parfid::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
