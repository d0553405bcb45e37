#pragma once

#include <iosfwd>

namespace waveformer {

// Entry point behind the `waveformer` tool. Exit codes: 0 success, 2 usage or
// configuration error, 3 data error, 4 numeric failure.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace waveformer
