#include "tilecrypt/cli.hpp"

int main(int argc, char** argv) { return tilecrypt::cli::run(argc, argv); }
