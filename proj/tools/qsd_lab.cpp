#include "qsdlab/runner.hpp"

int main(int argc, char** argv) { return qsdlab::run_cli(argc, argv); }
