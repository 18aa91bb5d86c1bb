#include <iostream>

#include "isolab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return isolab::cli::run(args, std::cout, std::cerr);
}
