// Runs the full verification ensemble and prints one line per criterion.

#include "softnpg/verify.hpp"

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

int main(int argc, char** argv) {
  softnpg::VerifyOptions options;
  options.seed = 7;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") options.quick = true;
    else if (arg == "--seed" && i + 1 < argc) options.seed = std::strtoull(argv[++i], nullptr, 10);
  }
  try {
    const auto results = softnpg::run_verification(options);
    std::fputs(softnpg::format_report(results).c_str(), stdout);
    for (const auto& r : results)
      if (!r.passed) return 1;
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
}
