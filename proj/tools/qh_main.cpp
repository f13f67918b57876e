#include "qh/cli.hpp"

int main(int argc, char** argv) { return qh::cli::run_cli(argc, argv); }
