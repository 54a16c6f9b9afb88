#include <string>
#include <vector>

#include "robinrd/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return robinrd::cli::run_command(std::move(args));
}
