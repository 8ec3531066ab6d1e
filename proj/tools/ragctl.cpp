#include "ragctl/cli.hpp"

int main(int argc, char** argv) { return ragctl::cli::run(argc, argv); }
