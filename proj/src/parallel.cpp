#include "sigaudit/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace sigaudit {

std::size_t default_worker_count() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    std::string_view s(env);
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc{} && ptr == s.data() + s.size() && n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace sigaudit
