#include <string>
#include <vector>

#include "commands.hpp"

int main(int argc, char** argv) {
  return ikeda::cli::main_with_args(std::vector<std::string>(argv, argv + argc));
}
