// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#include "stratus/cli.hpp"

int main(int argc, char** argv) { return stratus::cli_main(argc, argv); }
