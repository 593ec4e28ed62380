#include <iostream>

#include "nanosr/cli.hpp"

int main(int argc, char** argv) {
    return nanosr::cli::dispatch(argc, argv, std::cout, std::cerr);
}
