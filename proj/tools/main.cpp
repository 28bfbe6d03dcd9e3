#include "liftcut/cli.hpp"

int main(int argc, char** argv) { return liftcut::cli::run(argc, argv); }
