#include "nodal/cli.hpp"

int main(int argc, char** argv) { return nodal::cli_main(argc, argv); }
