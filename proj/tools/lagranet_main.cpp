#include "lagranet/harness.hpp"

int main(int argc, char** argv) { return lagranet::run_cli(argc, argv); }
