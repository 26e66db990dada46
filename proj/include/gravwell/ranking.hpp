#pragma once

#include <span>
#include <vector>

namespace gravwell {

// Ascending average ranks (1-based). Exactly equal keys share the mean of
// the positions they occupy, so the ranks always sum to n(n+1)/2.
std::vector<double> average_ranks(std::span<const double> keys);

} // namespace gravwell
