#include "resonance/cli.hpp"

int main(int argc, char** argv) { return resonance::run_cli(argc, argv); }
