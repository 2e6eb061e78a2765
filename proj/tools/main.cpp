#include "qdent_cli/commands.hpp"

int main(int argc, char** argv)
{
    return qdent::cli::run(argc, argv);
}
