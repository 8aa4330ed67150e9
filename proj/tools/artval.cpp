#include "artval/cli.hpp"

int main(int argc, char** argv) { return artval::cli::run(argc, argv); }
