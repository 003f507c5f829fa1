#include "adr/cli.hpp"

int main(int argc, char** argv) { return adr::cli::run(argc, argv); }
