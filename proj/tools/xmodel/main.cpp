#include "xmodel/cli.hpp"

int main(int argc, char** argv) { return xmodel::cli::dispatch(argc, argv); }
