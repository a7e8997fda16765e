#include "lgw/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lgw {

std::size_t thread_count() {
  std::size_t requested = 0;
  if (const char* env = std::getenv("LGW_THREADS")) {
    try {
      requested = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      requested = 0;
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

}  // namespace lgw
