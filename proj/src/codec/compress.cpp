#include "pico/codec/compress.hpp"

#include <algorithm>
#include <numeric>

#include "pico/core/error.hpp"

namespace pico::codec {

void CodecBundle::validate() const {
    if (!model) throw InputError("codec bundle has no generative model");
    if (prior.dim() != model->latent_dim())
        throw InputError("prior dimension " + std::to_string(prior.dim()) + " does not match latent_dim " +
                         std::to_string(model->latent_dim()));
    if (grouping.latent_dim() != model->latent_dim()) throw InputError("grouping does not cover the latent space");
}

Vector conditional_resample(const GaussianPrior& prior, const Vector& z, const MaskDecision& mask,
                            const GroupingScheme& grouping, Rng& rng) {
    if (z.size() != prior.dim()) throw InputError("conditional_resample: latent length does not match prior");
    const auto features = mask.transmitted_features(grouping);
    if (std::all_of(features.begin(), features.end(), [](bool t) { return t; })) return z;
    return ConditionalGaussian(prior, features).resample(z, rng);
}

MaskDecision choose_mask(const CodecBundle& bundle, const ProbabilitySource& probs,
                         const CompressionConfig& config, const Vector& z, Rng& rng) {
    MaskDecision mask = select_mask(probs(z, rng), config.lambda, bundle.grouping);
    if (!config.bit_budget) return mask;

    std::vector<int> sent;
    for (int g = 0; g < mask.group_count(); ++g)
        if (mask.transmit[std::size_t(g)]) sent.push_back(g);
    // Drop the least wanted (highest probability) groups first.
    std::stable_sort(sent.begin(), sent.end(), [&](int a, int b) { return mask.probs[a] > mask.probs[b]; });
    std::size_t next = 0;
    while (next < sent.size() && measure_bits(bundle.prior, z, mask, bundle.grouping) > *config.bit_budget)
        mask.transmit[std::size_t(sent[next++])] = false;
    if (next > 0) mask.lambda = double(mask.transmitted_count()) / double(mask.group_count());
    return mask;
}

Compressed compress_latent(const CodecBundle& bundle, const Vector& z, const MaskDecision& mask, Rng& rng) {
    Compressed out;
    out.latent = z;
    out.mask = mask;
    out.resampled = conditional_resample(bundle.prior, z, mask, bundle.grouping, rng);
    out.image = bundle.model->decode(out.resampled);
    out.bits = measure_bits(bundle.prior, z, mask, bundle.grouping);
    return out;
}

Compressed compress(const CodecBundle& bundle, const ProbabilitySource& probs, const CompressionConfig& config,
                    const Image& x, Rng& rng) {
    bundle.validate();
    const Vector z = bundle.model->encode(x);
    const MaskDecision mask = choose_mask(bundle, probs, config, z, rng);
    return compress_latent(bundle, z, mask, rng);
}

void save_prior(const std::filesystem::path& path, const PriorFile& file) {
    Archive a("pico.codec_prior");
    a.merge(file.prior.to_archive(), "prior/");
    a.meta()["grouping"] = file.grouping.to_json();
    a.meta()["model_checksum"] = file.model_checksum;
    a.save(path);
}

PriorFile load_prior(const std::filesystem::path& path) {
    const Archive a = Archive::load(path);
    a.expect_kind("pico.codec_prior");
    return PriorFile{GaussianPrior::from_archive(a.extract("prior/", "pico.gaussian_prior")),
                     GroupingScheme::from_json(a.meta().at("grouping")),
                     a.meta().at("model_checksum").get<std::string>()};
}

}  // namespace pico::codec
