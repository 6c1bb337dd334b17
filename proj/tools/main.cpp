#include "infotime/cli/cli.hpp"

int main(int argc, char** argv) { return infotime::cli::dispatch(argc, argv); }
