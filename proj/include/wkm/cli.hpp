#pragma once

namespace wkm::cli {

/// Entry point for the `wkm` tool. Returns 0 on success, 2 on usage errors
/// and 1 on runtime errors.
int run(int argc, char** argv);

}  // namespace wkm::cli
