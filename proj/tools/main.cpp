#include <string>
#include <vector>

#include "curvescope/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return curvescope::cli::run(args);
}
