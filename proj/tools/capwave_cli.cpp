// entry point; subcommands are wired up in cli.hpp
#include <iostream>

int main(int argc, char** argv) {
  std::cout << "capwave: subcommands pending\n";
  (void)argc;
  (void)argv;
  return 0;
}
