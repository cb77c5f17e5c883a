#include "cli.h"

int main(int argc, char** argv) { return scopeq::cli::dispatch(argc, argv); }
