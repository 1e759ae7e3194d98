#include "cli.hpp"

int main(int argc, char** argv) { return spherecov::cli::cli_main(argc, argv); }
