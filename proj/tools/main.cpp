#include <iostream>

#include "run_config.hpp"

int main(int argc, char** argv) {
  return tamed::cli::run_main(argc, argv, std::cout, std::cerr);
}
