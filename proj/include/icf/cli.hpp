#pragma once

#include <string>
#include <vector>

namespace icf {

// Entry point behind the ic-fusion binary. args excludes the program name.
// Exit codes: 0 success, 1 validation/check failure, 2 internal failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace icf
