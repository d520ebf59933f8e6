#include "framelens/cli.hpp"

int main(int argc, char** argv) { return framelens::cli::run(argc, argv); }
