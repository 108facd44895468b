#include "mapmind/cli.hpp"

int main(int argc, char** argv) { return mapmind::cli_dispatch(argc, argv); }
