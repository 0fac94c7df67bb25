#pragma once

#include "pico/codec/compress.hpp"

namespace pico::baselines {

// Uniformly random subset of exactly floor(lambda * d) groups.
codec::MaskDecision nonadaptive_mask(int group_count, double lambda, Rng& rng);

// Mask probabilities drawn i.i.d. U(0,1) per call, ignoring the latent. Fed
// through top-k selection this yields nonadaptive_mask's distribution; it is
// also the round-1 collection policy.
codec::ProbabilitySource uniform_random_source(int group_count);

}  // namespace pico::baselines
