#include "fairfis/cli.hpp"

int main(int argc, char** argv) { return fairfis::cli::run(argc, argv); }
