#pragma once

#include <ostream>
#include <string>

#include "lindstedt_cli/config.hpp"

namespace lindstedt::cli {

// Each command writes its artifacts below output_dir(c), prints a short
// summary to out and returns 0 when every assertion holds, 1 otherwise.
// Configuration problems surface as ConfigError, failed stages as other
// lindstedt::Error kinds.
int cmd_solve(const RunConfig& c, std::ostream& out);
int cmd_verify(const RunConfig& c, std::ostream& out);
int cmd_measure(const RunConfig& c, std::ostream& out);
int cmd_clusters(const RunConfig& c, std::ostream& out);
int cmd_bifurcate(const RunConfig& c, std::ostream& out);

// Shortest round-trip decimal form, so files do not depend on the stream state.
std::string format_double(double x);

}  // namespace lindstedt::cli
