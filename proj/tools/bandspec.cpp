#include "bandspec/cli.hpp"

int main(int argc, char** argv) { return bandspec::cli_main(argc, argv); }
