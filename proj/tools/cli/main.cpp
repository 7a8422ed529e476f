#include "commands.hpp"

int main(int argc, char** argv) { return webphuzz::cli::run(argc, argv); }
