#include "levyctl/app.hpp"

int main(int argc, char** argv) { return levyctl::run_cli(argc, argv); }
