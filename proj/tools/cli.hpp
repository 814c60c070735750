#pragma once

#include <ostream>

namespace ratio_mle::cli {

// Entry point shared by the ratio-mle binary and the tests. Returns 0 on
// success, 1 on a configuration or validation error, 2 on a runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ratio_mle::cli
