#include "behgan/cli.hpp"

int main(int argc, char** argv) { return behgan::cli::run(argc, argv); }
