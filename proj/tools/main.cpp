#include <string>
#include <vector>

#include "tomograd/cli.hpp"

int main(int argc, char** argv) {
  return tomograd::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
