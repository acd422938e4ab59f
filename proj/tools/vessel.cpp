#include "vessel/cli.hpp"

int main(int argc, char** argv) { return vessel::run_cli(argc, argv); }
