#include "pico/baselines/nonadaptive.hpp"

#include "pico/core/error.hpp"

namespace pico::baselines {

codec::MaskDecision nonadaptive_mask(int group_count, double lambda, Rng& rng) {
    if (group_count < 1) throw InputError("nonadaptive_mask: need at least one group");
    return codec::select_mask(uniform_vector(rng, group_count), lambda,
                              codec::GroupingScheme::contiguous(group_count, group_count));
}

codec::ProbabilitySource uniform_random_source(int group_count) {
    if (group_count < 1) throw InputError("uniform_random_source: need at least one group");
    return [group_count](const Vector&, Rng& rng) { return uniform_vector(rng, group_count); };
}

}  // namespace pico::baselines
