#include "cluslasso/cli.hpp"

int main(int argc, char** argv) { return cluslasso::cli::run(argc, argv); }
