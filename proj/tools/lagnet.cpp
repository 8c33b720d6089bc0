#include <iostream>
#include <string>
#include <vector>

#include "lagnet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lagnet::run_cli(args, std::cout, std::cerr);
}
