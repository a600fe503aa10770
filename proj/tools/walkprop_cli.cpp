#include "walkprop/cli.hpp"

int main(int argc, char** argv) { return walkprop::cli_main(argc, argv); }
