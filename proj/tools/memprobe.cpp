#include "memprobe/cli.hpp"

int main(int argc, char** argv) { return memprobe::cli::run(argc, argv); }
