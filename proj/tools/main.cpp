#include <vector>

#include "bfam/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bfam::cli::dispatch(args);
}
