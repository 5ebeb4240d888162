#include <iostream>

#include "rsma/cli.hpp"

int main(int argc, char** argv) {
    return rsma::cli_dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
