#include "wkm/cli.hpp"

int main(int argc, char** argv) { return wkm::cli::run(argc, argv); }
