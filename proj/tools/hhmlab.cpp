#include "commands.hpp"

int main(int argc, char** argv) { return hhmlab::hhmlab_main(argc, argv); }
