#include "fimscore/evaluation/auroc.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "fimscore/errors.hpp"

namespace fimscore {

double auroc(std::span<const double> in_scores, std::span<const double> out_scores) {
  if (in_scores.empty() || out_scores.empty()) throw InsufficientDataError("auroc: both score lists must be nonempty");
  std::vector<std::pair<double, bool>> all;  // (score, is_out)
  all.reserve(in_scores.size() + out_scores.size());
  for (double s : in_scores) all.emplace_back(s, false);
  for (double s : out_scores) all.emplace_back(s, true);
  for (const auto& [s, _] : all)
    if (std::isnan(s)) throw DomainError("auroc: NaN score");
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Ranks are 1-based; a tie group [i, j) shares the mid-rank (i + 1 + j) / 2,
  // a multiple of 0.5, so the sum below is exact.
  double rank_sum_out = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t outs = 0;
    while (j < all.size() && all[j].first == all[i].first) {
      outs += all[j].second ? 1 : 0;
      ++j;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum_out += mid_rank * static_cast<double>(outs);
    i = j;
  }
  const auto n_in = static_cast<double>(in_scores.size());
  const auto n_out = static_cast<double>(out_scores.size());
  const double u = rank_sum_out - n_out * (n_out + 1.0) / 2.0;
  return u / (n_in * n_out);
}

}  // namespace fimscore
