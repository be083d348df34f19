#include "oscring_cli/dispatch.hpp"

int main(int argc, char** argv) { return oscring::cli::dispatch(argc, argv); }
