#include "evjrs/cli.hpp"

int main(int argc, char** argv) { return evjrs::cli::dispatch(argc, argv); }
