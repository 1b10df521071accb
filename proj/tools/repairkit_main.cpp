#include <iostream>
#include <string>
#include <vector>

#include "repairkit/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return repairkit::cli::dispatch(args, std::cout, std::cerr);
}
