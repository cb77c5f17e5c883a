#pragma once

namespace scopeq::cli {

// Runs one subcommand. Returns 0 on success, 1 on usage errors and 2 on data
// errors.
int dispatch(int argc, const char* const* argv);

}  // namespace scopeq::cli
