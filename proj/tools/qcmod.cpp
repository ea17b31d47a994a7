#include "qcmod/cli.hpp"

int main(int argc, char** argv) { return qcmod::cli::run(argc, argv); }
