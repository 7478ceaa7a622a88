#include <iostream>

#include "tubeband/cli.hpp"

int main(int argc, char** argv) {
  return tubeband::cmd_dispatch(argc, argv, std::cout, std::cerr);
}
