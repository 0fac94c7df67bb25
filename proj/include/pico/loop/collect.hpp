#pragma once

#include <optional>
#include <string>

#include "pico/codec/compress.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/loop/record.hpp"
#include "pico/loop/record_log.hpp"
#include "pico/sim/sim_user.hpp"

namespace pico::loop {

struct SourcedImage {
    const Image* image = nullptr;
    std::string id;
};

class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual SourcedImage next(Rng& rng) = 0;
};

// Draws images uniformly at random (with replacement) from a dataset.
class DatasetSource final : public ImageSource {
public:
    explicit DatasetSource(const genmodel::ImageDataset& data);
    SourcedImage next(Rng& rng) override;

private:
    const genmodel::ImageDataset& data_;
};

struct CollectContext {
    const codec::CodecBundle* codec = nullptr;
    codec::ProbabilitySource policy;
    double lambda = 0.5;
    sim::ActionMode mode = sim::ActionMode::Sample;
    std::string session = "sim";
    int round = 0;
    ObjectStore* store = nullptr;  // optional; when set, x and the stimulus are stored
};

struct CollectOptions {
    std::optional<int> force_treatment;
};

// A record still waiting for its action, plus the stimulus to show.
struct PreparedInteraction {
    InteractionRecord record;
    Image stimulus;
};

// Flips T (unless forced) and renders the stimulus for x. The record has no
// action or timestamp yet; nothing is written to ctx.store.
PreparedInteraction prepare_interaction(const Image& x, const std::string& image_id, const CollectContext& ctx,
                                        Rng& rng, const CollectOptions& options = {});

// One step of interaction: flip T ~ Bernoulli(0.5), show x (T = 1) or its
// compression (T = 0), record the user's action. Storage is the caller's job.
InteractionRecord collect_interaction(ImageSource& source, const sim::UserPolicy& user, const CollectContext& ctx,
                                      Rng& rng, const CollectOptions& options = {});

// Collects until `negatives` records with T = 0 exist; T = 1 records drawn on
// the way are kept too.
std::vector<InteractionRecord> collect_until_negatives(ImageSource& source, const sim::UserPolicy& user,
                                                       const CollectContext& ctx, std::size_t negatives, Rng& rng);

// Labeled corpus images as T = 1 records with action = label.
std::vector<InteractionRecord> corpus_positives(const genmodel::ImageDataset& labeled,
                                                const codec::CodecBundle& codec, std::size_t count, int round,
                                                Rng& rng);

}  // namespace pico::loop
