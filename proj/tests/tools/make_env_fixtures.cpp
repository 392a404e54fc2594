// Writes the golden environment trajectories to stdout.
//   make_env_fixtures > tests/fixtures/env_golden.txt

#include <iostream>
#include <vector>

#include "env_golden.hpp"

int main() {
  std::vector<golden::Trajectory> ts;
  for (const auto& c : golden::cases()) ts.push_back(golden::record(c));
  golden::write(std::cout, ts);
  return 0;
}
