#include <cstdlib>
#include <iostream>
#include <string>

#include "ppk/acceptance.hpp"

// One line per criterion; a nonzero exit status if any criterion fails.
// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  ppk::AcceptanceOptions options;
  for (int k = 1; k < argc; ++k) options.criteria.push_back(std::atoi(argv[k]));
  bool all = true;
  ppk::run_acceptance(options, [&all](const ppk::CriterionResult& r) {
    all = all && r.pass;
    std::cout << ppk::format_result(r) << std::endl;
  });
  std::cout << (all ? "acceptance: all criteria passed" : "acceptance: FAILED") << std::endl;
  return all ? 0 : 1;
}
