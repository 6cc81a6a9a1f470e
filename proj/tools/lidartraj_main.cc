#include "commands.h"

int main(int argc, char** argv) { return lidartraj::cli::Main(argc, argv); }
