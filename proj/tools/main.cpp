#include "icf/cli.hpp"

int main(int argc, char** argv) {
    return icf::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
