#include "lsg/cli.hpp"

int main(int argc, char** argv) { return lsg::run_cli(argc, argv); }
