#include "icesar/cli.hpp"

int main(int argc, char** argv) { return icesar::cli_main(argc, argv); }
