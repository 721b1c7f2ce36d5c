#include "miniprof/cli.hpp"

int main(int argc, char** argv) { return miniprof::cli_main(argc, argv); }
