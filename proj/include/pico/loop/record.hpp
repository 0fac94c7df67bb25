#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pico/adversary/losses.hpp"
#include "pico/codec/mask.hpp"

namespace pico::loop {

inline constexpr int kRecordSchemaVersion = 1;

// Where a record came from: a user acting on a served stimulus, or a labeled
// corpus image injected as a positive example (label taken as the action).
enum class RecordSource { Interaction, Corpus };
std::string to_string(RecordSource source);
RecordSource record_source_from_string(const std::string& name);

struct InteractionRecord {
    int treatment = 1;  // T: 1 = original shown, 0 = compressed shown
    Vector latent;      // z = enc(x)
    Vector probs;       // mask probabilities; 0.5 everywhere when T = 1
    std::optional<codec::MaskDecision> mask;  // null when T = 1
    int action = 0;
    double bits = 0.0;
    std::string session;
    std::string timestamp;  // ISO-8601 UTC
    double lambda = 0.0;
    int round = 0;
    RecordSource source = RecordSource::Interaction;
    std::string image_id;       // corpus id of x
    std::string original_hash;  // object-store key of x, may be empty
    std::string stimulus_hash;  // object-store key of the image shown, may be empty
    std::optional<double> latency_ms;

    // Throws ValidationError on broken invariants (T outside {0,1}, T = 1 with
    // a mask, T = 0 without one, action outside [0, action_count)).
    void validate(int action_count = 0) const;

    nlohmann::json to_json() const;
    static InteractionRecord from_json(const nlohmann::json& j);
    bool operator==(const InteractionRecord& other) const;
};

std::string now_utc_iso8601();

adversary::TrainingBatch to_batch(const std::vector<InteractionRecord>& records);

}  // namespace pico::loop
