#include "cqf/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cqf::cli::run(args, std::cout, std::cerr);
}
