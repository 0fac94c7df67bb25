#include "pico/loop/record.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "pico/core/error.hpp"

namespace pico::loop {
namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), Eigen::Index(values.size()));
}

}  // namespace

std::string to_string(RecordSource source) { return source == RecordSource::Corpus ? "corpus" : "interaction"; }

RecordSource record_source_from_string(const std::string& name) {
    if (name == "interaction") return RecordSource::Interaction;
    if (name == "corpus") return RecordSource::Corpus;
    throw FormatError("unknown record source '" + name + "'");
}

void InteractionRecord::validate(int action_count) const {
    if (treatment != 0 && treatment != 1) throw ValidationError("record treatment must be 0 or 1");
    if (treatment == 1 && mask) throw ValidationError("T = 1 record must not carry a mask");
    if (treatment == 0 && !mask) throw ValidationError("T = 0 record needs its mask");
    if (action < 0 || (action_count > 0 && action >= action_count))
        throw ValidationError("action " + std::to_string(action) + " outside the task's action set");
    if (latent.size() == 0) throw ValidationError("record has no latent");
    if (mask && mask->probs.size() != probs.size()) throw ValidationError("record mask and probs disagree");
}

nlohmann::json InteractionRecord::to_json() const {
    nlohmann::json j = {{"schema", kRecordSchemaVersion},
                        {"T", treatment},
                        {"z", vector_json(latent)},
                        {"p", vector_json(probs)},
                        {"mask", mask ? mask->to_json() : nlohmann::json(nullptr)},
                        {"a", action},
                        {"bits", bits},
                        {"session", session},
                        {"timestamp", timestamp},
                        {"lambda", lambda},
                        {"round", round},
                        {"source", to_string(source)},
                        {"image_id", image_id},
                        {"original_hash", original_hash},
                        {"stimulus_hash", stimulus_hash}};
    j["latency_ms"] = latency_ms ? nlohmann::json(*latency_ms) : nlohmann::json(nullptr);
    return j;
}

InteractionRecord InteractionRecord::from_json(const nlohmann::json& j) {
    try {
        const int schema = j.at("schema").get<int>();
        if (schema != kRecordSchemaVersion)
            throw FormatError("unsupported record schema version " + std::to_string(schema));
        InteractionRecord r;
        r.treatment = j.at("T").get<int>();
        r.latent = json_vector(j.at("z"));
        r.probs = json_vector(j.at("p"));
        if (!j.at("mask").is_null()) r.mask = codec::MaskDecision::from_json(j.at("mask"));
        r.action = j.at("a").get<int>();
        r.bits = j.at("bits").get<double>();
        r.session = j.at("session").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.lambda = j.at("lambda").get<double>();
        r.round = j.at("round").get<int>();
        r.source = record_source_from_string(j.at("source").get<std::string>());
        r.image_id = j.at("image_id").get<std::string>();
        r.original_hash = j.at("original_hash").get<std::string>();
        r.stimulus_hash = j.at("stimulus_hash").get<std::string>();
        if (j.contains("latency_ms") && !j.at("latency_ms").is_null()) r.latency_ms = j.at("latency_ms").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed interaction record: ") + e.what());
    }
}

bool InteractionRecord::operator==(const InteractionRecord& o) const {
    return treatment == o.treatment && latent.size() == o.latent.size() && latent == o.latent &&
           probs.size() == o.probs.size() && probs == o.probs && mask == o.mask && action == o.action &&
           bits == o.bits && session == o.session && timestamp == o.timestamp && lambda == o.lambda &&
           round == o.round && source == o.source && image_id == o.image_id && original_hash == o.original_hash &&
           stimulus_hash == o.stimulus_hash && latency_ms == o.latency_ms;
}

std::string now_utc_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof(out), "%s.%03dZ", buf, int(ms));
    return out;
}

adversary::TrainingBatch to_batch(const std::vector<InteractionRecord>& records) {
    adversary::TrainingBatch batch;
    if (records.empty()) return batch;
    const auto dim = records.front().latent.size();
    const auto groups = records.front().probs.size();
    batch.latents.resize(dim, Eigen::Index(records.size()));
    batch.probs.resize(groups, Eigen::Index(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.latent.size() != dim || r.probs.size() != groups)
            throw InputError("records disagree on latent or group dimension");
        batch.treatment.push_back(r.treatment);
        batch.actions.push_back(r.action);
        batch.latents.col(Eigen::Index(i)) = r.latent;
        batch.probs.col(Eigen::Index(i)) = r.probs;
    }
    return batch;
}

}  // namespace pico::loop
