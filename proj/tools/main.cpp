#include "cli.hpp"

int main(int argc, char** argv) { return supermoment::cli::run(argc, argv); }
