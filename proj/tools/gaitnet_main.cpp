#include <string>
#include <vector>

#include "gaitnet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gaitnet::cli::run(std::move(args));
}
