#include "stno/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return stno::run_cli(argc, argv, std::cout, std::cerr);
}
