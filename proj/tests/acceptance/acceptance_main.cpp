#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "cli/selftest.hpp"

int main() {
  using semtrack::cli::battery_names;
  using semtrack::cli::run_battery;

  int failed = 0;
  const auto& names = battery_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = run_battery(names[i]);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2zu %-24s %s (%lld ms)\n", r.passed ? "PASS" : "FAIL", i + 1, r.name.c_str(), r.detail.c_str(),
                static_cast<long long>(ms));
    if (!r.passed) ++failed;
  }
  std::printf("%zu of %zu acceptance criteria passed\n", names.size() - static_cast<std::size_t>(failed), names.size());
  return failed == 0 ? 0 : 1;
}
