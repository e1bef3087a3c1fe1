#include <iostream>
#include <string>
#include <vector>

#include "stockcnn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return stockcnn::cli::run(args, std::cout, std::cerr);
}
