#include "ecal_cli/commands.hpp"

int main(int argc, char** argv) { return ecal::cli::run(argc, argv); }
