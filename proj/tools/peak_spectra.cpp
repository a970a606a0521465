#include "peakspec/cli.hpp"

int main(int argc, char** argv) { return peakspec::cli::run(argc, argv); }
