#pragma once

#include <span>

namespace fimscore {

// P(out > in) + 0.5 P(out == in) over all (in, out) pairs, from the Mann-Whitney
// rank sum with mid-ranks for ties. O(n log n). Higher scores mean "more OOD".
double auroc(std::span<const double> in_scores, std::span<const double> out_scores);

}  // namespace fimscore
