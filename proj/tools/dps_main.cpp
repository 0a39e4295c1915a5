#include "dps/cli.hpp"

int main(int argc, char** argv) { return dps::cli::run(argc, argv); }
