#include <string>
#include <vector>

#include "hydre/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hydre::cli::run(args);
}
