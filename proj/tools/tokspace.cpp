#include "tokspace/cli.hpp"

int main(int argc, char** argv) { return tokspace::dispatch(argc, argv); }
