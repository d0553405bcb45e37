#include <iostream>

#include "waveformer/cli.hpp"

int main(int argc, char** argv) { return waveformer::run_cli(argc, argv, std::cout, std::cerr); }
