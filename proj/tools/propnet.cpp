#include <iostream>

#include "propnet/cli.hpp"

int main(int argc, char** argv) {
  return propnet::cli::run(argc, argv, std::cout, std::cerr);
}
