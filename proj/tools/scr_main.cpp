#include "scr/cli.hpp"
#include "scr/profile.hpp"

int main(int argc, char** argv) {
  scr::tune_allocator();
  return scr::cli::run(argc, argv);
}
