#include "smeta/cli.hpp"

int main(int argc, char** argv) { return smeta::run_cli(argc, argv); }
