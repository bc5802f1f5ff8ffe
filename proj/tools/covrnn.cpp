#include "covrnn/cli.hpp"

int main(int argc, char** argv) { return covrnn::cli::parse_and_run(argc, argv); }
