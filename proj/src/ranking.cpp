#include "printmatch/ranking.hpp"

#include <algorithm>

namespace printmatch {

void sort_entries(std::vector<RankEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.design_id < b.design_id;
    });
}

std::optional<int> order_of_match(const std::vector<RankEntry>& entries, const std::set<std::string>& true_designs) {
    std::optional<double> best;
    for (const auto& e : entries)
        if (true_designs.contains(e.design_id) && (!best || e.score > *best)) best = e.score;
    if (!best) return std::nullopt;
    int ahead = 0;
    for (const auto& e : entries)
        if (!true_designs.contains(e.design_id) && e.score >= *best) ++ahead;
    return ahead + 1;
}

}  // namespace printmatch
