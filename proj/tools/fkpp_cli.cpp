#include "fkpp/cli.hpp"

int main(int argc, char** argv) { return fkpp::cli::run(argc, argv); }
