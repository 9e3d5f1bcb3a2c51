#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "printmatch/features.hpp"
#include "printmatch/ranking.hpp"
#include "printmatch/vocabulary.hpp"

namespace printmatch {

/// Visual-word frequency histogram.
struct BowHistogram {
    std::vector<std::uint32_t> counts;

    std::uint64_t total() const;
    bool operator==(const BowHistogram&) const = default;
};

/// Each descriptor votes for its nearest centroid (ties -> lowest index).
BowHistogram quantize(const DescriptorMatrix& descriptors, const Vocabulary& vocab);
BowHistogram quantize(const FeatureSet& fs, const Vocabulary& vocab);

enum class Pathway { local, global };

/// Candidate designs with their histograms (local) or vectors (global).
/// Immutable once built; per-class log word probabilities are precomputed.
class MatcherIndex {
public:
    static MatcherIndex local(std::vector<std::string> design_ids, std::vector<BowHistogram> histograms,
                              double alpha = 1.0);
    static MatcherIndex global(std::vector<std::string> design_ids, std::vector<GlobalDescriptor> vectors);

    Pathway pathway() const noexcept { return pathway_; }
    double alpha() const noexcept { return alpha_; }
    const std::vector<std::string>& design_ids() const noexcept { return design_ids_; }
    const std::vector<BowHistogram>& histograms() const noexcept { return histograms_; }
    const std::vector<GlobalDescriptor>& vectors() const noexcept { return vectors_; }
    std::size_t size() const noexcept { return design_ids_.size(); }
    int vocabulary_size() const noexcept { return words_; }

    /// log((count + alpha) / (total + alpha N)) for design d and word w.
    double log_probability(std::size_t d, std::size_t w) const { return log_theta_[d * words_ + w]; }

private:
    MatcherIndex() = default;

    Pathway pathway_ = Pathway::local;
    double alpha_ = 1.0;
    int words_ = 0;
    std::vector<std::string> design_ids_;
    std::vector<BowHistogram> histograms_;
    std::vector<GlobalDescriptor> vectors_;
    std::vector<double> log_theta_;
};

/// Multinomial naive Bayes, one class per design, uniform prior.
/// score = sum_w q_w log theta_dw; descending, ties by ascending design_id.
Ranking rank_bayes(const BowHistogram& query, const MatcherIndex& index);

/// score = -sqrt(sum_i w_i (q_i - d_i)^2); weights come from the indexed vector,
/// else from the query, else 1.
Ranking rank_euclidean(const GlobalDescriptor& query, const MatcherIndex& index);

}  // namespace printmatch
