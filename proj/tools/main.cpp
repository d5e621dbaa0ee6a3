#include "rfdfin/cli.hpp"
#include "rfdfin/parallel.hpp"

int main(int argc, char** argv) {
  rfdfin::keep_large_allocations();
  return rfdfin::run_cli(argc, argv);
}
