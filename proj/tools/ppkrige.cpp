#include <iostream>

#include "ppk/run.hpp"

int main(int argc, char** argv) { return ppk::main_entry(argc, argv, std::cout, std::cerr); }
