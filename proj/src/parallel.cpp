#include "pcawald/parallel.hpp"

#include <cstdlib>
#include <string>

namespace pcawald {

int worker_count() {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* cap = std::getenv("PCA_WALD_THREADS")) {
    try {
      const int limit = std::stoi(cap);
      if (limit > 0 && limit < workers) workers = limit;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return workers;
}

}  // namespace pcawald
