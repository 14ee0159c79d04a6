#include "mhdbl/cli.hpp"

int main(int argc, char** argv) { return mhdbl::cli::run_cli(argc, argv); }
