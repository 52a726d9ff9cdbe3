#include "disco/cli.hpp"

int main(int argc, char** argv) { return disco::cli_main(argc, argv); }
