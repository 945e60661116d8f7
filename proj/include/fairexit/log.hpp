#pragma once

#include <string>

namespace fairexit {

// Writes "[fairexit] warning: ..." to stderr, deduplicated by message so
// per-batch conditions do not flood training logs.
void warn(const std::string& message);

}  // namespace fairexit
