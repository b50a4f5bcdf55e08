#pragma once

namespace icesar {

/// Entry point of the `icesar` tool. Returns 0 on success, 1 on a runtime
/// failure (one-line diagnostic on stderr) and 2 on a usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace icesar
