#include <iostream>

#include "reviewguard/cli/app.hpp"

int main(int argc, char** argv) { return reviewguard::cli::dispatch(argc, argv, std::cout, std::cerr); }
