// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Configuration-driven runner: loads a JSON run description, validates it
// against the mesh and model, dispatches to the matching solver, and
// streams snapshots to the configured writers.
#pragma once

namespace stratus {

/// Entry point of the `stratus` executable, callable in-process for
/// testing.  Returns 0 on success, 1 on runtime solver failures, and 2
/// on configuration or flag errors.
int cli_main(int argc, const char* const* argv);

}  // namespace stratus
