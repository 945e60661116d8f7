#include "fairexit/log.hpp"

#include <iostream>
#include <mutex>
#include <set>

namespace fairexit {

void warn(const std::string& message) {
  static std::mutex mu;
  static std::set<std::string> seen;
  std::lock_guard<std::mutex> lock(mu);
  if (seen.insert(message).second) std::cerr << "[fairexit] warning: " << message << "\n";
}

}  // namespace fairexit
