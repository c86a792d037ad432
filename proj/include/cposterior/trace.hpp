#pragma once

#include <cstdint>
#include <vector>

namespace cposterior {

/// Post-burn-in sampler states plus the metadata needed to regenerate them.
template <typename State>
struct ChainTrace {
  std::vector<State> states;
  std::uint64_t burnin = 0;
  std::uint64_t sweeps = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  bool empty() const { return states.empty(); }
  std::size_t size() const { return states.size(); }
};

}  // namespace cposterior
