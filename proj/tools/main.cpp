#include "cli.hpp"

int main(int argc, char** argv) { return rim::cli::run(argc, argv); }
