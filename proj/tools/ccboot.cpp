#include <iostream>

#include "ccboot/cli.hpp"

int main(int argc, char** argv) {
  return ccboot::cli::run(argc, argv, std::cout, std::cerr);
}
