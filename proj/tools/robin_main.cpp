#include "robin/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return robin::run_cli(argc, argv, std::cout, std::cerr);
}
