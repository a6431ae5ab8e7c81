#include <iostream>
#include <string>
#include <vector>

#include "fgc/cli.hpp"

int main(int argc, char** argv) {
  return fgc::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
