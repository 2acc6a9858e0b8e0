#include "puforge/cli/commands.hpp"

int main(int argc, char** argv) { return puforge::cli::run(argc, argv); }
