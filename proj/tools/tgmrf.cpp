#include <iostream>

#include "tgmrf/cli.hpp"

int main(int argc, char** argv) {
  return tgmrf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
