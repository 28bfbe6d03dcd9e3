#include "liftcut/parallel.hpp"

#include <cstdlib>
#include <string>

namespace liftcut {

unsigned default_workers() {
  if (const char* env = std::getenv("LIFTCUT_JOBS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace liftcut
