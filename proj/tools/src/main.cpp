#include "cli.hpp"

int main(int argc, char** argv) { return ctc::run_cli(argc, argv); }
