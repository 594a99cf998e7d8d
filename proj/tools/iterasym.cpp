#include <iterasym/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return iterasym::cli::main(argc, argv, std::cout, std::cerr); }
