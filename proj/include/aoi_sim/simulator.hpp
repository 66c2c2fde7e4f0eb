#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoi_sim/aoi.hpp"
#include "aoi_sim/channel.hpp"
#include "aoi_sim/metrics.hpp"
#include "aoi_sim/policy.hpp"
#include "aoi_sim/scene.hpp"
#include "aoi_sim/sources.hpp"

namespace aoisim {

enum class PolicyKind { Threshold, Ppo, OracleAll, OracleFreshOnly };

struct PolicySpec {
    PolicyKind kind = PolicyKind::Threshold;
    double gamma_mat_ms = 51.0;        // Threshold
    PpoConfig ppo;                     // Ppo
    long train_episodes = 600;         // Ppo
    std::string checkpoint_path;       // Ppo: load instead of train when set
};

struct SimConfig {
    FleetConfig fleet;
    ChannelConfig channel;
    SceneConfig scene;
    PolicySpec policy;
    long horizon_slots = 60000;
    long eval_interval_slots = 30;  // default: one evaluation per generation interval
    std::uint64_t seed = 1;
    metrics::RewardWeights reward_weights;

    void validate() const {
        fleet.validate();
        channel.validate();
        scene.validate();
        if (horizon_slots < 0)
            throw std::invalid_argument("sim: horizon must be >= 0");
        if (eval_interval_slots < 1)
            throw std::invalid_argument("sim: eval_interval must be >= 1");
    }
};

struct SlotRecord {
    long slot = 0;
    AoiVector aoi;
    SelectionMask mask;
    double psnr = 0.0;
    double ssim = 0.0;
    double reward = 0.0;
    TrafficState traffic_state = TrafficState::LowTraffic;
    int deliveries = 0;
    int drops = 0;
};

using PolicyFn = std::function<SelectionMask(const AoiVector&, double /*slot_len_ms*/)>;

/// Per-slot closed loop. Within a slot: traffic-state step, camera ticks
/// (delivery before generation), then policy + scoring at evaluation slots.
/// process_current_slot() and advance() are split so a decision can be
/// scored at the slot it was taken in.
class Simulator {
public:
    explicit Simulator(const SimConfig& cfg)
        : cfg_(cfg), registry_(cfg.fleet.n_cameras),
          observations_(cfg.fleet.n_cameras),
          last_delivery_slot_(cfg.fleet.n_cameras, -1),
          traffic_rng_(derive_seed(cfg.seed, 0x7ca11)),
          scene_cache_(cfg.scene, cfg.fleet.n_cameras) {
        cfg_.validate();
        cameras_.reserve(cfg.fleet.n_cameras);
        for (int n = 0; n < cfg.fleet.n_cameras; ++n) cameras_.emplace_back(n, cfg.seed);
    }

    long now() const { return slot_; }
    const SimConfig& config() const { return cfg_; }
    TrafficState traffic_state() const { return channel_state_.traffic_state; }
    const LatestFrameRegistry& registry() const { return registry_; }
    bool is_eval_slot() const {
        return slot_ > 0 && slot_ % cfg_.eval_interval_slots == 0;
    }

    FleetStats fleet_stats() const {
        FleetStats s;
        for (const auto& cam : cameras_) {
            s.generated += cam.generated();
            s.dropped += cam.dropped();
            s.delivered += cam.delivered();
        }
        return s;
    }

    /// Runs the current slot's channel step, deliveries, and generations.
    /// The clock stays on this slot until advance().
    std::pair<int, int> process_current_slot() {
        // One shared traffic process: congestion hits the whole cell, while
        // delay draws stay per-camera.
        if (cfg_.channel.burstiness_enabled)
            channel_state_ = step_traffic_state(channel_state_, cfg_.channel,
                                                cfg_.fleet.slot_len_ms, traffic_rng_, slot_);
        int deliveries = 0;
        int drops = 0;
        for (auto& cam : cameras_) {
            const long dropped_before = cam.dropped();
            if (auto frame = cam.tick(slot_, cfg_.fleet, cfg_.channel, channel_state_)) {
                registry_.on_delivery(*frame);
                observations_[frame->camera_id] = scene_cache_.observation(
                    frame->camera_id, frame->gen_slot * cfg_.fleet.slot_len_ms);
                observations_[frame->camera_id].pose = frame->pose;
                last_delivery_slot_[frame->camera_id] = slot_;
                ++deliveries;
                if (delivery_sink_) delivery_sink_(*frame);
            }
            drops += static_cast<int>(cam.dropped() - dropped_before);
        }
        return {deliveries, drops};
    }

    void advance() { ++slot_; }

    AoiVector current_aoi() const { return registry_.aoi(slot_); }

    /// Gathers the selected cameras' cached stale observations.
    std::vector<Observation> selected_observations(const SelectionMask& mask) const {
        std::vector<Observation> chosen;
        for (int n = 0; n < cfg_.fleet.n_cameras; ++n)
            if (mask[n] && registry_.latest(n)) chosen.push_back(observations_[n]);
        return chosen;
    }

    /// Scores a selection at the current slot against the live ground truth.
    SlotRecord evaluate(const SelectionMask& mask) const {
        const double t_ms = slot_ * cfg_.fleet.slot_len_ms;
        const Image& gt = scene_cache_.ground_truth(t_ms);
        const Image recon = reconstruct(cfg_.scene, selected_observations(mask), t_ms);
        const auto score = metrics::reward_breakdown(gt, recon, cfg_.reward_weights);
        SlotRecord rec;
        rec.slot = slot_;
        rec.aoi = current_aoi();
        rec.mask = mask;
        rec.psnr = score.psnr_db;
        rec.ssim = score.ssim_value;
        rec.reward = score.total;
        rec.traffic_state = channel_state_.traffic_state;
        return rec;
    }

    /// Fresh-only oracle: cameras whose latest frame arrived within the
    /// current evaluation window.
    SelectionMask fresh_only_mask() const {
        SelectionMask mask(cfg_.fleet.n_cameras, 0);
        for (int n = 0; n < cfg_.fleet.n_cameras; ++n)
            mask[n] = (registry_.latest(n) &&
                       slot_ - last_delivery_slot_[n] <= cfg_.eval_interval_slots)
                          ? 1
                          : 0;
        return mask;
    }

    void set_delivery_sink(std::function<void(const FrameRecord&)> sink) {
        delivery_sink_ = std::move(sink);
    }

    /// Full run over the horizon, emitting a record per evaluation slot.
    void run(const PolicyFn& policy, const std::function<void(const SlotRecord&)>& sink) {
        while (slot_ < cfg_.horizon_slots) {
            const auto [deliveries, drops] = process_current_slot();
            if (is_eval_slot()) {
                const auto mask = policy(current_aoi(), cfg_.fleet.slot_len_ms);
                SlotRecord rec = evaluate(mask);
                rec.deliveries = deliveries;
                rec.drops = drops;
                sink(rec);
            }
            advance();
        }
    }

    std::vector<SlotRecord> run_collect(const PolicyFn& policy) {
        std::vector<SlotRecord> out;
        run(policy, [&out](const SlotRecord& r) { out.push_back(r); });
        return out;
    }

private:
    SimConfig cfg_;
    LatestFrameRegistry registry_;
    std::vector<CameraState> cameras_;
    std::vector<Observation> observations_;
    std::vector<long> last_delivery_slot_;
    ChannelState channel_state_;
    Rng traffic_rng_;
    mutable SceneCache scene_cache_;
    long slot_ = 0;
    std::function<void(const FrameRecord&)> delivery_sink_;
};

/// Builds the selection rule for the non-learned policy kinds.
inline PolicyFn make_policy_fn(const PolicySpec& spec, const Simulator* sim = nullptr) {
    switch (spec.kind) {
        case PolicyKind::Threshold: {
            ThresholdPolicyCfg cfg{spec.gamma_mat_ms};
            return [cfg](const AoiVector& aoi, double slot_ms) {
                return threshold_select(aoi, slot_ms, cfg);
            };
        }
        case PolicyKind::OracleAll:
            return [](const AoiVector& aoi, double) {
                SelectionMask m(aoi.ages.size(), 0);
                for (std::size_t n = 0; n < m.size(); ++n) m[n] = aoi.ages[n].seeded ? 1 : 0;
                return m;
            };
        case PolicyKind::OracleFreshOnly: {
            if (!sim) throw std::invalid_argument("fresh-only policy needs a simulator handle");
            return [sim](const AoiVector&, double) { return sim->fresh_only_mask(); };
        }
        case PolicyKind::Ppo:
            throw std::invalid_argument("PPO policy requires a trained agent (see harness)");
    }
    throw std::logic_error("unknown policy kind");
}

/// Frozen-policy wrapper: samples the factored Bernoulli action from the
/// trained network, masking unseeded cameras.
inline PolicyFn make_ppo_policy_fn(const PpoAgent& agent, std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(derive_seed(seed, 0xac7));
    return [&agent, rng](const AoiVector& aoi, double slot_ms) {
        const auto state = normalize_state(aoi.ages_ms(slot_ms), agent.config());
        const auto rho = agent.policy_forward(state);
        auto mask = sample_action(rho, *rng, nullptr);
        for (std::size_t n = 0; n < mask.size(); ++n)
            if (!aoi.ages[n].seeded) mask[n] = 0;
        return mask;
    };
}

/// Single-decision episode environment over the simulator: each evaluation
/// slot is one episode. Exhausting the horizon re-seeds a fresh replication.
class SimEnvironment : public Environment {
public:
    SimEnvironment(const SimConfig& cfg, std::uint64_t seed_salt = 0)
        : base_cfg_(cfg), seed_salt_(seed_salt) {
        reset_replication();
    }

    std::vector<double> begin_episode() override {
        advance_to_next_eval();
        return sim_->current_aoi().ages_ms(base_cfg_.fleet.slot_len_ms);
    }

    double act(const SelectionMask& action) override {
        auto mask = action;
        const auto aoi = sim_->current_aoi();
        for (std::size_t n = 0; n < mask.size(); ++n)
            if (!aoi.ages[n].seeded) mask[n] = 0;
        const SlotRecord rec = sim_->evaluate(mask);
        last_psnr_ = rec.psnr;
        last_ssim_ = rec.ssim;
        sim_->advance();
        return rec.reward;
    }

    double last_psnr() const override { return last_psnr_; }
    double last_ssim() const override { return last_ssim_; }

private:
    void reset_replication() {
        SimConfig cfg = base_cfg_;
        cfg.seed = derive_seed(base_cfg_.seed, 0xe9150deULL + seed_salt_ * 131 + replication_);
        cfg.horizon_slots = std::max<long>(base_cfg_.horizon_slots,
                                           cfg.eval_interval_slots + 1);
        sim_ = std::make_unique<Simulator>(cfg);
        ++replication_;
    }

    void advance_to_next_eval() {
        for (;;) {
            if (sim_->now() >= sim_->config().horizon_slots) reset_replication();
            sim_->process_current_slot();
            if (sim_->is_eval_slot()) return;  // clock parked for act()
            sim_->advance();
        }
    }

    SimConfig base_cfg_;
    std::uint64_t seed_salt_;
    long replication_ = 0;
    std::unique_ptr<Simulator> sim_;
    double last_psnr_ = 0.0;
    double last_ssim_ = 0.0;
};

}  // namespace aoisim
