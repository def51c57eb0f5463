#include "qmono/cli.hpp"

int main(int argc, char** argv) { return qmono::cli::run(argc, argv); }
