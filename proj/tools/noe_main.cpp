#include "noe/cli.hpp"

int main(int argc, char** argv) { return noe::cli::main_entry(argc, argv); }
