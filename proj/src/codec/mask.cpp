#include "pico/codec/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pico/core/error.hpp"

namespace pico::codec {

GroupingScheme GroupingScheme::contiguous(int latent_dim, int group_count) {
    if (latent_dim < 1 || group_count < 1 || group_count > latent_dim)
        throw ConfigError("grouping needs 1 <= groups <= latent_dim, got " + std::to_string(group_count) + " groups for " +
                          std::to_string(latent_dim) + " features");
    std::vector<int> offsets{0};
    const int base = latent_dim / group_count, extra = latent_dim % group_count;
    for (int g = 0; g < group_count; ++g) offsets.push_back(offsets.back() + base + (g < extra ? 1 : 0));
    return from_offsets(std::move(offsets));
}

GroupingScheme GroupingScheme::from_offsets(std::vector<int> offsets) {
    if (offsets.size() < 2 || offsets.front() != 0) throw ConfigError("grouping offsets must start at 0");
    for (std::size_t i = 1; i < offsets.size(); ++i)
        if (offsets[i] <= offsets[i - 1]) throw ConfigError("grouping offsets must be strictly increasing");
    GroupingScheme g;
    g.offsets_ = std::move(offsets);
    return g;
}

int GroupingScheme::group_of(int feature) const {
    if (feature < 0 || feature >= latent_dim()) throw InputError("feature index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), feature);
    return int(it - offsets_.begin()) - 1;
}

GroupingScheme GroupingScheme::from_json(const nlohmann::json& j) {
    return from_offsets(j.get<std::vector<int>>());
}

int MaskDecision::transmitted_count() const { return int(std::count(transmit.begin(), transmit.end(), true)); }

std::vector<bool> MaskDecision::transmitted_features(const GroupingScheme& grouping) const {
    if (group_count() != grouping.group_count())
        throw InputError("mask has " + std::to_string(group_count()) + " groups, grouping has " +
                         std::to_string(grouping.group_count()));
    std::vector<bool> out(std::size_t(grouping.latent_dim()), false);
    for (int g = 0; g < group_count(); ++g)
        if (transmit[std::size_t(g)])
            for (int i = grouping.begin(g); i < grouping.end(g); ++i) out[std::size_t(i)] = true;
    return out;
}

nlohmann::json MaskDecision::to_json() const {
    std::string bits;
    for (bool t : transmit) bits.push_back(t ? '1' : '0');
    return {{"probs", std::vector<double>(probs.data(), probs.data() + probs.size())},
            {"transmit", bits},
            {"lambda", lambda}};
}

MaskDecision MaskDecision::from_json(const nlohmann::json& j) {
    MaskDecision m;
    const auto p = j.at("probs").get<std::vector<double>>();
    m.probs = Eigen::Map<const Vector>(p.data(), Eigen::Index(p.size()));
    for (char c : j.at("transmit").get<std::string>()) {
        if (c != '0' && c != '1') throw FormatError("mask transmit bits must be 0/1");
        m.transmit.push_back(c == '1');
    }
    m.lambda = j.at("lambda").get<double>();
    if (m.transmit.size() != p.size()) throw FormatError("mask probs and transmit bits differ in length");
    return m;
}

bool MaskDecision::operator==(const MaskDecision& o) const {
    return probs.size() == o.probs.size() && probs == o.probs && transmit == o.transmit && lambda == o.lambda;
}

int transmit_count(double lambda, int group_count) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0,1], got " + std::to_string(lambda));
    return std::min(group_count, int(std::floor(lambda * group_count + 1e-9)));
}

MaskDecision select_mask(const Vector& probs, double lambda, const GroupingScheme& grouping) {
    const int d = grouping.group_count();
    if (probs.size() != d)
        throw InputError("select_mask: expected " + std::to_string(d) + " probabilities, got " +
                         std::to_string(probs.size()));
    if (!((probs.array() >= 0.0).all() && (probs.array() <= 1.0).all()))
        throw InputError("select_mask: probabilities must lie in [0,1]");
    const int k = transmit_count(lambda, d);
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] < probs[b]; });
    MaskDecision out{probs, std::vector<bool>(std::size_t(d), false), lambda};
    for (int i = 0; i < k; ++i) out.transmit[std::size_t(order[std::size_t(i)])] = true;
    return out;
}

}  // namespace pico::codec
