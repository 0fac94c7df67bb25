#include "pico/service/session_manager.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "pico/baselines/nonadaptive.hpp"
#include "pico/core/error.hpp"

namespace pico::service {

nlohmann::json TaskDescriptor::to_json() const { return {{"id", id}, {"prompt", prompt}, {"actions", actions}}; }

TaskDescriptor digit_task() {
    TaskDescriptor t{"digits", kDigitPrompt, {}};
    for (int k = 0; k < 10; ++k) t.actions.push_back(std::to_string(k));
    return t;
}

SessionManager::SessionManager(ServiceConfig config, codec::CodecBundle codec, genmodel::ImageDataset stimuli,
                               std::vector<TaskDescriptor> tasks)
    : config_(std::move(config)),
      codec_(std::move(codec)),
      stimuli_(std::move(stimuli)),
      id_rng_(derive_seed(config_.seed, 0x5e55)) {
    codec_.validate();
    stimuli_.validate();
    if (stimuli_.empty()) throw ConfigError("service needs at least one stimulus image");
    if (stimuli_.shape != codec_.model->image_shape()) throw ConfigError("stimulus images do not match the backbone");
    if (config_.stimuli_per_session == 0) throw ConfigError("stimuli_per_session must be positive");
    codec::transmit_count(config_.lambda, codec_.group_count());
    if (tasks.empty()) throw ConfigError("service needs at least one task");
    for (auto& t : tasks) {
        if (t.action_count() < 2) throw ConfigError("task '" + t.id + "' needs at least two actions");
        if (t.id.empty() || t.id.find_first_of("/\\. ") != std::string::npos)
            throw ConfigError("task id '" + t.id + "' is not a plain name");
        auto state = std::make_unique<TaskState>();
        const auto dir = config_.data_dir / t.id;
        state->log = std::make_unique<loop::RecordLog>(dir / "records.jsonl");
        state->store = std::make_unique<loop::ObjectStore>(dir / "objects");
        state->descriptor = std::move(t);
        const std::string id = state->descriptor.id;
        if (!tasks_.emplace(id, std::move(state)).second) throw ConfigError("duplicate task id '" + id + "'");
    }
}

SessionManager::TaskState& SessionManager::task_state(const std::string& task_id) {
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("unknown task '" + task_id + "'");
    return *it->second;
}

const SessionManager::TaskState& SessionManager::task_state(const std::string& task_id) const {
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("unknown task '" + task_id + "'");
    return *it->second;
}

std::shared_ptr<SessionManager::Session> SessionManager::session(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
    return it->second;
}

std::string SessionManager::fresh_id(const char* prefix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%016llx%016llx", prefix, static_cast<unsigned long long>(id_rng_()),
                  static_cast<unsigned long long>(id_rng_()));
    return buf;
}

void SessionManager::set_policy(const std::string& task_id, std::shared_ptr<const adversary::CompressionPolicy> policy) {
    if (policy && (policy->latent_dim() != codec_.prior.dim() || policy->group_count() != codec_.group_count()))
        throw ConfigError("policy does not match the codec dimensions");
    auto& t = task_state(task_id);
    std::lock_guard lock(mutex_);
    t.policy = std::move(policy);
}

const TaskDescriptor& SessionManager::task(const std::string& task_id) const { return task_state(task_id).descriptor; }

int SessionManager::round(const std::string& task_id) const {
    const auto& t = task_state(task_id);
    std::lock_guard lock(mutex_);
    return t.round;
}

std::vector<std::string> SessionManager::task_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : tasks_) out.push_back(id);
    return out;
}

SessionInfo SessionManager::create_session(const std::string& task_id, const std::string& participant_id) {
    auto& t = task_state(task_id);
    if (participant_id.empty()) throw ValidationError("participant id must not be empty");
    auto s = std::make_shared<Session>();
    s->participant = participant_id;
    s->task_id = task_id;
    int round = 0;
    {
        std::lock_guard lock(mutex_);
        s->id = fresh_id("s");
        const std::uint64_t n = session_count_++;
        s->rng.seed(derive_seed(config_.seed, 0x10000 + n));
        round = t.round;
        sessions_[s->id] = s;
    }
    s->order.resize(stimuli_.size());
    std::iota(s->order.begin(), s->order.end(), std::size_t{0});
    std::shuffle(s->order.begin(), s->order.end(), s->rng);
    s->order.resize(std::min(s->order.size(), config_.stimuli_per_session));
    return SessionInfo{s->id, s->participant, t.descriptor, s->order.size(), round};
}

Stimulus SessionManager::next_stimulus(const std::string& session_id) {
    auto s = session(session_id);
    std::lock_guard session_lock(s->mutex);
    if (s->staged) return Stimulus{s->staged->stimulus_id, s->answered, s->order.size(), s->staged->png};
    if (s->answered >= s->order.size()) throw EndOfSession("session " + session_id + " is complete");

    auto& t = task_state(s->task_id);
    std::shared_ptr<const adversary::CompressionPolicy> policy;
    loop::CollectContext ctx;
    std::string stimulus_id;
    {
        std::lock_guard lock(mutex_);
        policy = t.policy;
        ctx.round = t.round;
        stimulus_id = fresh_id("x");
    }
    ctx.codec = &codec_;
    ctx.policy = policy ? codec::ProbabilitySource([policy](const Vector& z, Rng&) { return policy->probs(z); })
                        : baselines::uniform_random_source(codec_.group_count());
    ctx.lambda = config_.lambda;
    ctx.session = s->id;

    const std::size_t i = s->order[s->answered];
    const std::string image_id = stimuli_.ids.empty() ? std::to_string(i) : stimuli_.ids[i];
    Staged staged{stimulus_id, loop::prepare_interaction(stimuli_.images[i], image_id, ctx, s->rng), {}};
    staged.png = encode_png(staged.prepared.stimulus);
    s->staged = std::move(staged);
    return Stimulus{s->staged->stimulus_id, s->answered, s->order.size(), s->staged->png};
}

Ack SessionManager::submit_action(const std::string& session_id, const std::string& stimulus_id, int action,
                                  std::optional<double> latency_ms) {
    auto s = session(session_id);
    auto& t = task_state(s->task_id);
    std::lock_guard session_lock(s->mutex);
    if (!s->staged || s->staged->stimulus_id != stimulus_id) {
        if (s->answered_ids.count(stimulus_id)) throw ConflictError("stimulus " + stimulus_id + " was already answered");
        throw ConflictError("stimulus " + stimulus_id + " is not the pending stimulus of this session");
    }
    if (action < 0 || action >= t.descriptor.action_count())
        throw ValidationError("action " + std::to_string(action) + " outside [0, " +
                              std::to_string(t.descriptor.action_count()) + ")");
    if (latency_ms && !(*latency_ms >= 0.0)) throw ValidationError("latency must be non-negative");

    auto record = s->staged->prepared.record;
    const std::size_t i = s->order[s->answered];
    record.original_hash = t.store->put(stimuli_.images[i]);
    record.stimulus_hash = record.treatment == 1 ? record.original_hash : t.store->put_png(s->staged->png);
    record.action = action;
    record.latency_ms = latency_ms;
    record.timestamp = loop::now_utc_iso8601();
    record.validate(t.descriptor.action_count());
    t.log->append(record);

    s->answered_ids.insert(stimulus_id);
    s->staged.reset();
    ++s->answered;
    return Ack{stimulus_id, s->answered, s->order.size(), s->answered >= s->order.size()};
}

SessionSummary SessionManager::summary(const std::string& session_id) const {
    auto s = session(session_id);
    const int r = round(s->task_id);
    std::lock_guard session_lock(s->mutex);
    return SessionSummary{s->id,          s->participant, s->task_id, s->answered, s->order.size(), r,
                          s->answered >= s->order.size()};
}

RoundResult SessionManager::advance_round(const std::string& task_id) {
    auto& t = task_state(task_id);
    std::lock_guard training_lock(t.training);
    const auto records = t.log->read_all();
    int current = 0;
    {
        std::lock_guard lock(mutex_);
        current = t.round;
    }
    Rng init(derive_seed(config_.seed, 0x20000 + std::uint64_t(current)));
    auto models = adversary::PicoModels::create(t.descriptor.action_count(), codec_.prior.dim(), codec_.group_count(),
                                                config_.sizes, init);
    auto training = config_.training;
    training.seed = derive_seed(config_.seed, 0x30000 + std::uint64_t(current));
    auto report = loop::run_batch_training(records, training, models);

    const auto checkpoint = config_.data_dir / task_id / "policies" / ("round-" + std::to_string(current) + ".pico");
    std::filesystem::create_directories(checkpoint.parent_path());
    models.save(checkpoint);
    auto policy = std::make_shared<const adversary::CompressionPolicy>(models.policy);
    int next = 0;
    {
        std::lock_guard lock(mutex_);
        t.policy = std::move(policy);
        next = ++t.round;
    }
    return RoundResult{task_id, next, std::move(report), checkpoint};
}

std::vector<loop::InteractionRecord> SessionManager::export_records(const std::string& task_id) const {
    return task_state(task_id).log->read_all();
}

}  // namespace pico::service
