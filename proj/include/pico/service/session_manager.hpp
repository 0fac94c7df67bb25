#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pico/adversary/networks.hpp"
#include "pico/core/bytes.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/loop/collect.hpp"
#include "pico/loop/record_log.hpp"
#include "pico/loop/training.hpp"

namespace pico::service {

inline constexpr const char* kDigitPrompt =
    "Choose the appropriate label that best suits the image: 0, 1, 2, 3, 4, 5, 6, 7, 8, or 9";

struct TaskDescriptor {
    std::string id;
    std::string prompt;
    std::vector<std::string> actions;

    int action_count() const { return int(actions.size()); }
    nlohmann::json to_json() const;
};

TaskDescriptor digit_task();

struct ServiceConfig {
    double lambda = 0.5;
    std::size_t stimuli_per_session = 200;
    std::uint64_t seed = 0;
    std::filesystem::path data_dir = "pico-data";
    loop::TrainingConfig training;
    adversary::NetworkSizes sizes;
};

struct SessionInfo {
    std::string session_id;
    std::string participant_id;
    TaskDescriptor task;
    std::size_t total = 0;
    int round = 0;
};

struct Stimulus {
    std::string stimulus_id;
    std::size_t index = 0;  // 0-based position in the session
    std::size_t total = 0;
    Bytes png;
};

struct Ack {
    std::string stimulus_id;
    std::size_t answered = 0;
    std::size_t total = 0;
    bool done = false;
};

struct SessionSummary {
    std::string session_id;
    std::string participant_id;
    std::string task_id;
    std::size_t answered = 0;
    std::size_t total = 0;
    int round = 0;
    bool done = false;
};

struct RoundResult {
    std::string task_id;
    int round = 0;  // the round now being served
    loop::TrainingReport report;
    std::filesystem::path checkpoint;
};

// Server-side state of the human-in-the-loop experiment. The coin flip, the
// codec and all hidden fields (T, z, p, mask, bits) stay here; clients only
// ever receive rendered PNG stimuli and opaque ids.
//
// Thread safety: every public method may be called concurrently. Sessions are
// independent; the per-task record log serializes appends; the serving policy
// is swapped atomically by advance_round.
class SessionManager {
public:
    SessionManager(ServiceConfig config, codec::CodecBundle codec, genmodel::ImageDataset stimuli,
                   std::vector<TaskDescriptor> tasks);

    // Serve T = 0 stimuli with a previously trained policy instead of
    // uniform-random mask probabilities.
    void set_policy(const std::string& task_id, std::shared_ptr<const adversary::CompressionPolicy> policy);

    SessionInfo create_session(const std::string& task_id, const std::string& participant_id);
    // Returns the staged stimulus again if it has not been answered yet.
    // Throws EndOfSession once every stimulus has been answered.
    Stimulus next_stimulus(const std::string& session_id);
    // Throws ConflictError for a stale or already answered stimulus id and
    // ValidationError for an action outside the task's action set.
    Ack submit_action(const std::string& session_id, const std::string& stimulus_id, int action,
                      std::optional<double> latency_ms = std::nullopt);
    SessionSummary summary(const std::string& session_id) const;
    // Trains fresh models on the task's whole log, checkpoints them and swaps
    // the serving policy. Throws TrainingError unless both T classes exist.
    RoundResult advance_round(const std::string& task_id);

    const TaskDescriptor& task(const std::string& task_id) const;
    int round(const std::string& task_id) const;
    std::vector<loop::InteractionRecord> export_records(const std::string& task_id) const;
    std::vector<std::string> task_ids() const;

private:
    struct TaskState {
        TaskDescriptor descriptor;
        std::unique_ptr<loop::RecordLog> log;
        std::unique_ptr<loop::ObjectStore> store;
        std::shared_ptr<const adversary::CompressionPolicy> policy;  // null: uniform random
        int round = 1;
        std::mutex training;  // one advance_round at a time per task
    };
    struct Staged {
        std::string stimulus_id;
        loop::PreparedInteraction prepared;
        Bytes png;
    };
    struct Session {
        std::string id;
        std::string participant;
        std::string task_id;
        std::vector<std::size_t> order;
        std::size_t answered = 0;
        std::optional<Staged> staged;
        std::set<std::string> answered_ids;
        Rng rng;
        mutable std::mutex mutex;
    };

    TaskState& task_state(const std::string& task_id);
    const TaskState& task_state(const std::string& task_id) const;
    std::shared_ptr<Session> session(const std::string& session_id) const;
    std::string fresh_id(const char* prefix);

    ServiceConfig config_;
    codec::CodecBundle codec_;
    genmodel::ImageDataset stimuli_;
    std::map<std::string, std::unique_ptr<TaskState>> tasks_;

    mutable std::mutex mutex_;  // sessions_, id_rng_, session_count_, task policy/round fields
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    Rng id_rng_;
    std::uint64_t session_count_ = 0;
};

}  // namespace pico::service
