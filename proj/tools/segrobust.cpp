// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return segrobust::cli::run(argc, argv, std::cout, std::cerr); }
