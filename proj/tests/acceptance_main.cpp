#include <cstdio>
#include <cstdlib>
#include <string>

#include "sinkasym/acceptance.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = 20261016;
  if (argc > 1) seed = std::strtoull(argv[1], nullptr, 10);
  const auto results = sinkasym::acceptance::run_all(seed);
  int failed = 0;
  double total = 0.0;
  for (const auto& r : results) {
    std::printf("%s  (%.2fs)\n", sinkasym::acceptance::format_line(r).c_str(), r.seconds);
    failed += !r.pass;
    total += r.seconds;
  }
  std::printf("%zu/%zu criteria passed in %.1fs\n", results.size() - failed, results.size(), total);
  return failed == 0 ? 0 : 1;
}
