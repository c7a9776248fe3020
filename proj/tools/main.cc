#include <iostream>

#include "cli.h"

int main(int argc, char** argv) {
  return clcnet::cli::Main(argc, argv, std::cout, std::cerr);
}
