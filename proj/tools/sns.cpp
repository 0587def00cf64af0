#include "sns/cli.hpp"

int main(int argc, char** argv) { return sns::cli_main(argc, argv); }
