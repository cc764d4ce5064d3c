#include "protorel/cli.hpp"

int main(int argc, char** argv) { return protorel::cli::dispatch(argc, argv); }
