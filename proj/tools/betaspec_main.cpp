#include "betaspec/cli.hpp"

int main(int argc, char** argv)
{
    return betaspec::cli::dispatch(argc, argv);
}
