#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "pico/core/tensor.hpp"

namespace pico::codec {

// Partition of latent features into contiguous groups; masks act on groups.
class GroupingScheme {
public:
    GroupingScheme() = default;
    // Near-equal contiguous blocks (sizes differ by at most one).
    static GroupingScheme contiguous(int latent_dim, int group_count);
    // offsets: 0 = o_0 < o_1 < ... < o_d = latent_dim; group g is [o_g, o_{g+1}).
    static GroupingScheme from_offsets(std::vector<int> offsets);

    int latent_dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
    int group_count() const { return offsets_.empty() ? 0 : int(offsets_.size()) - 1; }
    int begin(int group) const { return offsets_.at(std::size_t(group)); }
    int end(int group) const { return offsets_.at(std::size_t(group) + 1); }
    int group_of(int feature) const;
    const std::vector<int>& offsets() const { return offsets_; }

    nlohmann::json to_json() const { return offsets_; }
    static GroupingScheme from_json(const nlohmann::json& j);
    bool operator==(const GroupingScheme&) const = default;

private:
    std::vector<int> offsets_;
};

struct MaskDecision {
    Vector probs;                // per-group mask probability, in [0,1]
    std::vector<bool> transmit;  // per-group
    double lambda = 0.0;

    int group_count() const { return int(transmit.size()); }
    int transmitted_count() const;
    // Per-feature expansion of `transmit`.
    std::vector<bool> transmitted_features(const GroupingScheme& grouping) const;

    nlohmann::json to_json() const;
    static MaskDecision from_json(const nlohmann::json& j);
    bool operator==(const MaskDecision& other) const;
};

// floor(lambda * d), robust to representation error in lambda (0.3 * 10 is 3).
int transmit_count(double lambda, int group_count);

// Transmits the floor(lambda*d) groups with the lowest probabilities; ties go
// to the lowest group index.
MaskDecision select_mask(const Vector& probs, double lambda, const GroupingScheme& grouping);

}  // namespace pico::codec
