#include <iostream>

#include "cli_app.hpp"

int main(int argc, char** argv) {
  return tsod::cli::run_main(argc, argv, std::cout, std::cerr);
}
