// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wbpref::cli::run_cli(argc, argv, std::cout, std::cerr); }
