#include "spfkit/cli.hpp"

int main(int argc, char** argv) { return spfkit::run(argc, argv); }
