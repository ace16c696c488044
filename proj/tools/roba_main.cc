#include <iostream>

#include "roba/commands.h"

int main(int argc, char** argv) {
  return roba::RunCli(argc, argv, std::cout, std::cerr);
}
