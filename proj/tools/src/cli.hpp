#pragma once

#include <ostream>

namespace trf::cli {

/// Entry point of the trf tool. Returns 0 on success, 2 on usage errors and
/// 1 on runtime errors. Results go to `out` (or to files when an output
/// directory is set); diagnostics and the resolved configuration go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trf::cli
