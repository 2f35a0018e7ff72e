#include <crase/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return crase::run_cli(argc, argv, std::cout, std::cerr); }
