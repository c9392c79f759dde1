// SPDX-License-Identifier: Apache-2.0
#include "mimosync/cli.hpp"

int main(int argc, char** argv) { return mimosync::cli_main(argc, argv); }
