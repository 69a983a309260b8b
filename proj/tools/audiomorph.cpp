#include "audiomorph/cli/cli.hpp"

int main(int argc, char** argv) { return audiomorph::cli::run(argc, argv); }
