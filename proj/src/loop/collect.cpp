#include "pico/loop/collect.hpp"

#include <algorithm>
#include <numeric>

#include "pico/core/error.hpp"

namespace pico::loop {

DatasetSource::DatasetSource(const genmodel::ImageDataset& data) : data_(data) {
    if (data_.empty()) throw InputError("image source needs at least one image");
}

SourcedImage DatasetSource::next(Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    const std::size_t i = pick(rng);
    return {&data_.images[i], data_.ids.empty() ? std::to_string(i) : data_.ids[i]};
}

PreparedInteraction prepare_interaction(const Image& x, const std::string& image_id, const CollectContext& ctx,
                                        Rng& rng, const CollectOptions& options) {
    if (ctx.codec == nullptr) throw ConfigError("collect: no codec bundle");
    const auto& codec = *ctx.codec;
    const int t = options.force_treatment ? *options.force_treatment : int(bernoulli(rng, 0.5));
    if (t != 0 && t != 1) throw InputError("forced treatment must be 0 or 1");

    PreparedInteraction out;
    auto& r = out.record;
    r.treatment = t;
    r.session = ctx.session;
    r.lambda = ctx.lambda;
    r.round = ctx.round;
    r.image_id = image_id;
    r.latent = codec.model->encode(x);
    if (t == 1) {
        const int d = codec.group_count();
        r.probs = Vector::Constant(d, 0.5);
        const codec::MaskDecision full{r.probs, std::vector<bool>(std::size_t(d), true), 1.0};
        r.bits = codec::measure_bits(codec.prior, r.latent, full, codec.grouping);
        out.stimulus = x;
    } else {
        const codec::CompressionConfig cfg{ctx.lambda, std::nullopt, 0};
        const auto mask = codec::choose_mask(codec, ctx.policy, cfg, r.latent, rng);
        auto c = codec::compress_latent(codec, r.latent, mask, rng);
        r.probs = mask.probs;
        r.mask = mask;
        r.bits = c.bits;
        out.stimulus = std::move(c.image);
    }
    return out;
}

InteractionRecord collect_interaction(ImageSource& source, const sim::UserPolicy& user, const CollectContext& ctx,
                                      Rng& rng, const CollectOptions& options) {
    const SourcedImage item = source.next(rng);
    auto prepared = prepare_interaction(*item.image, item.id, ctx, rng, options);
    auto& r = prepared.record;
    if (ctx.store != nullptr) {
        r.original_hash = ctx.store->put(*item.image);
        r.stimulus_hash = r.treatment == 1 ? r.original_hash : ctx.store->put(prepared.stimulus);
    }
    try {
        r.action = user.act(prepared.stimulus, ctx.mode, rng);
    } catch (const std::exception& e) {
        throw Error("user policy failed on image '" + item.id + "' (T=" + std::to_string(r.treatment) +
                    "): " + e.what());
    }
    r.timestamp = now_utc_iso8601();
    r.validate(user.action_count());
    return std::move(r);
}

std::vector<InteractionRecord> collect_until_negatives(ImageSource& source, const sim::UserPolicy& user,
                                                       const CollectContext& ctx, std::size_t negatives, Rng& rng) {
    std::vector<InteractionRecord> out;
    std::size_t found = 0;
    while (found < negatives) {
        out.push_back(collect_interaction(source, user, ctx, rng));
        found += out.back().treatment == 0;
    }
    return out;
}

std::vector<InteractionRecord> corpus_positives(const genmodel::ImageDataset& labeled,
                                                const codec::CodecBundle& codec, std::size_t count, int round,
                                                Rng& rng) {
    if (count == 0) return {};
    if (!labeled.has_labels()) throw InputError("corpus positives need a labeled dataset");
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (count < order.size()) order.resize(count);
    const int d = codec.group_count();
    const codec::MaskDecision full{Vector::Constant(d, 0.5), std::vector<bool>(std::size_t(d), true), 1.0};
    std::vector<InteractionRecord> out;
    out.reserve(order.size());
    const std::string stamp = now_utc_iso8601();
    for (std::size_t i : order) {
        InteractionRecord r;
        r.treatment = 1;
        r.latent = codec.model->encode(labeled.images[i]);
        r.probs = full.probs;
        r.action = labeled.labels[i];
        r.bits = codec::measure_bits(codec.prior, r.latent, full, codec.grouping);
        r.session = "corpus";
        r.timestamp = stamp;
        r.lambda = 1.0;
        r.round = round;
        r.source = RecordSource::Corpus;
        r.image_id = labeled.ids.empty() ? std::to_string(i) : labeled.ids[i];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace pico::loop
