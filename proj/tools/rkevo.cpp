#include "rkevo/cli.hpp"

int main(int argc, char** argv) {
  return rkevo::cli::run(argc, argv);
}
