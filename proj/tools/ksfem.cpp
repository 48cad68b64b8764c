#include "ksfem/cli/app.hpp"

int main(int argc, char **argv) { return ksfem::cli::run(argc, argv); }
