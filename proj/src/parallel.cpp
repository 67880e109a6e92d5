#include "ccboot/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ccboot {

unsigned default_thread_count() {
  if (const char* env = std::getenv("CCBOOT_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (const std::exception&) {
      // fall through to hardware concurrency
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace ccboot
