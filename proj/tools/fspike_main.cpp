#include "fspike/cli.hpp"

int main(int argc, char** argv) { return fspike::run_cli(argc, argv); }
