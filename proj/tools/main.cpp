#include "cli.hpp"

int main(int argc, char** argv) { return rwb::cli::run(argc, argv); }
