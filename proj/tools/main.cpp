#include "parkipipe/cli.hpp"

int main(int argc, char** argv) {
  return parkipipe::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
