#include "sketchprune/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return sketchprune::cli::run_cli(argc, argv, std::cout, std::cerr);
}
