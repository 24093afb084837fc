#include "uda/cli.hpp"

int main(int argc, char** argv) { return uda::cli::run(argc, argv); }
