#include "covclust/cli.hpp"

int main(int argc, char** argv) { return covclust::run_cli(argc, argv); }
