#include "lggd/cli/cli.hpp"

int main(int argc, char** argv) { return lggd::cli::run(argc, argv); }
