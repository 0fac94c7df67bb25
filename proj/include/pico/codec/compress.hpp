#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "pico/codec/bits.hpp"
#include "pico/codec/gaussian_prior.hpp"
#include "pico/codec/mask.hpp"
#include "pico/genmodel/beta_vae.hpp"

namespace pico::codec {

// Everything both ends of the channel share: backbone, prior and grouping.
struct CodecBundle {
    std::shared_ptr<const genmodel::GenerativeModel> model;
    GaussianPrior prior;
    GroupingScheme grouping;

    // Throws InputError unless model, prior and grouping agree on latent_dim.
    void validate() const;
    int group_count() const { return grouping.group_count(); }
};

// Maps a latent to per-group mask probabilities. Learned policies ignore the
// random stream; the non-adaptive baseline draws from it.
using ProbabilitySource = std::function<Vector(const Vector& z, Rng& rng)>;

struct CompressionConfig {
    double lambda = 0.5;
    // Optional hard cap n on transmitted bits. Groups are dropped in order of
    // decreasing mask probability until the cap holds; the decision's lambda is
    // then lowered to transmitted/d.
    std::optional<double> bit_budget;
    std::uint64_t seed = 0;
};

struct Compressed {
    Image image;
    MaskDecision mask;
    double bits = 0.0;
    Vector latent;     // enc(x)
    Vector resampled;  // latent after masking and resampling
};

Vector conditional_resample(const GaussianPrior& prior, const Vector& z, const MaskDecision& mask,
                            const GroupingScheme& grouping, Rng& rng);

// Applies a precomputed mask to a latent: resample, decode, count bits.
Compressed compress_latent(const CodecBundle& bundle, const Vector& z, const MaskDecision& mask, Rng& rng);

Compressed compress(const CodecBundle& bundle, const ProbabilitySource& probs, const CompressionConfig& config,
                    const Image& x, Rng& rng);

// Chooses the mask for a latent the same way compress() does.
MaskDecision choose_mask(const CodecBundle& bundle, const ProbabilitySource& probs,
                         const CompressionConfig& config, const Vector& z, Rng& rng);

// Prior + grouping persisted next to the backbone checkpoint.
struct PriorFile {
    GaussianPrior prior;
    GroupingScheme grouping;
    std::string model_checksum;
};
void save_prior(const std::filesystem::path& path, const PriorFile& file);
PriorFile load_prior(const std::filesystem::path& path);

}  // namespace pico::codec
