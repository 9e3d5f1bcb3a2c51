#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace printmatch {

struct RankEntry {
    std::string design_id;
    double score = 0.0;  // higher is more similar
};

/// Candidates sorted by descending score; equal scores fall back to ascending design_id.
struct Ranking {
    std::string query_id;
    std::vector<RankEntry> entries;
    std::optional<int> order_of_match;
};

void sort_entries(std::vector<RankEntry>& entries);

/// 1-based rank of the best-scoring design in `true_designs`. Ties are resolved
/// pessimistically: every non-true candidate scoring equal to it ranks ahead.
/// nullopt when none of the true designs is a candidate.
std::optional<int> order_of_match(const std::vector<RankEntry>& entries, const std::set<std::string>& true_designs);

}  // namespace printmatch
