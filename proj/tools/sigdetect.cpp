#include <iostream>

#include "sigdetect/cli.hpp"

int main(int argc, char** argv) { return sigdetect::cli::run(argc, argv, std::cout, std::cerr); }
