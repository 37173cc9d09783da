// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#include "gsrobust_cli.hpp"

int main(int argc, char** argv) { return gsrobust::cli::run_cli(argc, argv); }
