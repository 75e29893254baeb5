#include <string>
#include <vector>

#include "fdavp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fdavp::run_cli(args);
}
