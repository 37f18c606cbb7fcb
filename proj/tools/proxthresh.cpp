#include "proxthresh/cli.hpp"

int main(int argc, char** argv) { return proxthresh::run_cli(argc, argv); }
