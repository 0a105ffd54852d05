#include "ash/cli.hpp"

int main(int argc, char **argv) { return ash::run_cli(argc, argv); }
