#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
    return gamma_audit::cli::run(argc, argv, std::cout, std::cerr);
}
