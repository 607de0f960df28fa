#include "cli.hpp"

int main(int argc, char** argv) { return retina::cli::run(argc, argv); }
