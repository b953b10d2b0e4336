#include "vsglight/cli.h"

int main(int argc, char** argv) { return vsg::run_cli(argc, argv); }
