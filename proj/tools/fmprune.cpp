#include <iostream>
#include <string>
#include <vector>

#include "fmprune/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fmprune::cli::run(args, std::cout, std::cerr);
}
