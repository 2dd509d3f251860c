#include "featstore/cli.hpp"

int main(int argc, char** argv) { return featstore::dispatch(argc, argv); }
