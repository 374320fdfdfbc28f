#include "tagrec/cli.hpp"

int main(int argc, char** argv) { return tagrec::run_cli(argc, argv); }
