#include "bigsos/cli.hpp"

int main(int argc, char** argv) { return bigsos::cli::run(argc, argv); }
