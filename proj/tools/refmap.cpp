#include "refmap/cli.hpp"

int main(int argc, char** argv) { return refmap::cli::run(argc, argv); }
