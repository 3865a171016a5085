// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return geneval::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
