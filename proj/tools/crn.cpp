#include "crn/cli_app.hpp"

int main(int argc, char** argv) { return crn::cli::run_command(argc, argv); }
