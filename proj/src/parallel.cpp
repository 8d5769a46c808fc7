#include "vulab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace vulab {

int worker_count() {
  if (const char* env = std::getenv("VULAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {
bool& inside_parallel_region() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

}  // namespace vulab
