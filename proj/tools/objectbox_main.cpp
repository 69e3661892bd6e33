#include <iostream>

#include "objectbox/cli.hpp"

int main(int argc, char** argv) {
  return objectbox::run_cli(argc, argv, std::cout, std::cerr);
}
