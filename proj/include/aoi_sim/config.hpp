#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoi_sim/simulator.hpp"
#include "aoi_sim/toml.hpp"

namespace aoisim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
    SimConfig base;
    std::vector<double> gamma_grid_ms;       // MAT sweep axis
    std::vector<double> delay_grid_ms;       // mean-delay sweep axis
    int replications = 10;
    long eval_episodes = 200;                // frozen-policy evaluation length

    void validate() const {
        base.validate();
        if (replications < 1) throw ConfigError("experiment.replications must be >= 1");
        if (gamma_grid_ms.empty()) throw ConfigError("experiment.gamma_grid_ms must be nonempty");
        for (std::size_t i = 1; i < gamma_grid_ms.size(); ++i)
            if (gamma_grid_ms[i] < gamma_grid_ms[i - 1])
                throw ConfigError("experiment.gamma_grid_ms must be sorted ascending");
        for (std::size_t i = 1; i < delay_grid_ms.size(); ++i)
            if (delay_grid_ms[i] < delay_grid_ms[i - 1])
                throw ConfigError("experiment.delay_grid_ms must be sorted ascending");
        for (double d : delay_grid_ms)
            if (d <= 0.0) throw ConfigError("experiment.delay_grid_ms entries must be > 0");
        if (eval_episodes < 1) throw ConfigError("experiment.eval_episodes must be >= 1");
    }
};

/// Desk-scale defaults: N=6 cameras, C=30 slots of 1 ms, E[Y]=60 ms,
/// horizon 60000 slots, gamma grid 0..120 step 6 ms, 10 replications.
inline ExperimentSpec default_experiment() {
    ExperimentSpec spec;
    SimConfig& cfg = spec.base;
    cfg.fleet.n_cameras = 6;
    cfg.fleet.gen_interval_slots = 30;
    cfg.fleet.slot_len_ms = 1.0;
    cfg.channel.mean_delay_low_ms = 60.0;
    cfg.channel.mean_delay_high_ms = 240.0;
    cfg.channel.lambda_switch = 0.0005;
    cfg.channel.mu_switch = 0.001;
    cfg.channel.burstiness_enabled = false;
    cfg.horizon_slots = 60000;
    cfg.eval_interval_slots = 30;
    cfg.seed = 1;
    cfg.fleet.gen_phase_offset = 5;
    cfg.scene.width = 64;
    cfg.scene.height = 64;
    cfg.scene.depth_bits = 8;
    cfg.scene.background = 128.0;
    cfg.scene.stripe_overlap = 0.48;
    // Vertical trains of alternating bright/dark blobs, one per stripe.
    // The alternation anti-correlates the pattern with its shifted self, so a
    // reconstruction from a sufficiently old frame is worse than filling with
    // the background, while fresh frames are close to exact: that contrast is
    // what gives the MAT curve its interior optimum. The wrap distance
    // (velocity * period) equals one full alternation (two blob spacings), so
    // the snap-back maps each train onto itself: the reconstruction error of a
    // frame then depends on its age alone, not on when it is evaluated, which
    // keeps per-state reward noise down, and the short cycle makes renders
    // cacheable.
    {
        const double xs[] = {5.3, 16.0, 26.7, 37.3, 48.0, 58.7};
        const double spacing = 10.8;
        const double period_ms = 390.0;
        for (int i = 0; i < 6; ++i) {
            double sign = (i % 2 == 0) ? 1.0 : -1.0;
            for (double y = -36.0 + (i % 4) * spacing / 4.0; y < 79.0; y += spacing) {
                Blob b;
                b.center_x = xs[i];
                b.center_y = y;
                b.velocity_y = 2.0 * spacing / period_ms;  // px per ms, drifting down
                b.amplitude = 110.0 * sign;
                b.radius = 2.4;
                b.motion_period_ms = period_ms;
                cfg.scene.blobs.push_back(b);
                sign = -sign;
            }
        }
    }
    cfg.policy.kind = PolicyKind::Threshold;
    cfg.policy.gamma_mat_ms = 51.0;
    cfg.policy.ppo.n_cameras = cfg.fleet.n_cameras;
    spec.gamma_grid_ms.clear();
    for (int g = 0; g <= 120; g += 6) spec.gamma_grid_ms.push_back(g);
    spec.delay_grid_ms = {20.0, 40.0, 60.0, 80.0};
    spec.replications = 10;
    spec.eval_episodes = 200;
    return spec;
}

namespace detail_cfg {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: bad type for field '") + key + "'");
    }
}

inline PolicyKind parse_policy_kind(const std::string& s) {
    if (s == "threshold") return PolicyKind::Threshold;
    if (s == "ppo") return PolicyKind::Ppo;
    if (s == "all") return PolicyKind::OracleAll;
    if (s == "fresh-only") return PolicyKind::OracleFreshOnly;
    throw ConfigError("config: policy.kind must be one of threshold|ppo|all|fresh-only, got '" +
                      s + "'");
}

inline TrajectoryKind parse_trajectory_kind(const std::string& s) {
    if (s == "static") return TrajectoryKind::Static;
    if (s == "circular_orbit") return TrajectoryKind::CircularOrbit;
    throw ConfigError("config: fleet.trajectory.kind must be static|circular_orbit, got '" + s +
                      "'");
}

}  // namespace detail_cfg

/// Overlays a parsed config document onto the defaults; unknown top-level
/// keys are rejected so typos fail loudly.
inline ExperimentSpec experiment_from_json(const nlohmann::json& doc) {
    using detail_cfg::get_or;
    ExperimentSpec spec = default_experiment();
    SimConfig& cfg = spec.base;
    static const std::vector<std::string> known = {
        "fleet", "channel", "scene", "policy", "horizon_slots", "eval_interval_slots",
        "seed", "reward_weights", "experiment"};
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("config: unknown top-level key '" + it.key() + "'");

    if (doc.contains("fleet")) {
        const auto& f = doc.at("fleet");
        cfg.fleet.n_cameras = get_or(f, "n_cameras", cfg.fleet.n_cameras);
        cfg.fleet.gen_interval_slots = get_or<long>(f, "gen_interval_slots",
                                                    cfg.fleet.gen_interval_slots);
        cfg.fleet.slot_len_ms = get_or(f, "slot_len_ms", cfg.fleet.slot_len_ms);
        cfg.fleet.gen_phase_offset = get_or<long>(f, "gen_phase_offset",
                                                  cfg.fleet.gen_phase_offset);
        if (f.contains("trajectory")) {
            const auto& tr = f.at("trajectory");
            cfg.fleet.trajectory.kind = detail_cfg::parse_trajectory_kind(
                get_or<std::string>(tr, "kind", "static"));
            cfg.fleet.trajectory.ring_radius =
                get_or(tr, "ring_radius", cfg.fleet.trajectory.ring_radius);
            cfg.fleet.trajectory.height = get_or(tr, "height", cfg.fleet.trajectory.height);
            cfg.fleet.trajectory.angular_rate =
                get_or(tr, "angular_rate", cfg.fleet.trajectory.angular_rate);
        }
    }
    if (doc.contains("channel")) {
        const auto& c = doc.at("channel");
        cfg.channel.mean_delay_low_ms = get_or(c, "mean_delay_low_ms",
                                               cfg.channel.mean_delay_low_ms);
        cfg.channel.mean_delay_high_ms = get_or(c, "mean_delay_high_ms",
                                                cfg.channel.mean_delay_high_ms);
        cfg.channel.lambda_switch = get_or(c, "lambda_switch", cfg.channel.lambda_switch);
        cfg.channel.mu_switch = get_or(c, "mu_switch", cfg.channel.mu_switch);
        cfg.channel.burstiness_enabled = get_or(c, "burstiness_enabled",
                                                cfg.channel.burstiness_enabled);
        if (c.contains("eta")) cfg.channel.eta = c.at("eta").get<double>();
        if (c.contains("background_rates")) {
            const auto rates = c.at("background_rates").get<std::vector<double>>();
            if (rates.size() != 2)
                throw ConfigError("config: channel.background_rates must have 2 entries");
            cfg.channel.background_rates = {rates[0], rates[1]};
        }
    }
    if (doc.contains("scene")) {
        const auto& s = doc.at("scene");
        cfg.scene.width = get_or(s, "width", cfg.scene.width);
        cfg.scene.height = get_or(s, "height", cfg.scene.height);
        cfg.scene.depth_bits = get_or(s, "depth_bits", cfg.scene.depth_bits);
        cfg.scene.background = get_or(s, "background", cfg.scene.background);
        cfg.scene.stripe_overlap = get_or(s, "stripe_overlap", cfg.scene.stripe_overlap);
        if (s.contains("blobs")) {
            cfg.scene.blobs.clear();
            for (const auto& bj : s.at("blobs")) {
                Blob b;
                b.center_x = get_or(bj, "center_x", 0.0);
                b.center_y = get_or(bj, "center_y", 0.0);
                b.velocity_x = get_or(bj, "velocity_x", 0.0);
                b.velocity_y = get_or(bj, "velocity_y", 0.0);
                b.amplitude = get_or(bj, "amplitude", 0.0);
                b.radius = get_or(bj, "radius", 1.0);
                b.motion_period_ms = get_or(bj, "motion_period_ms", 0.0);
                cfg.scene.blobs.push_back(b);
            }
        }
        if (s.contains("novel_view_pose")) {
            const auto& p = s.at("novel_view_pose");
            cfg.scene.novel_view_pose.x = get_or(p, "x", 0.0);
            cfg.scene.novel_view_pose.y = get_or(p, "y", 0.0);
            cfg.scene.novel_view_pose.z = get_or(p, "z", 0.0);
            cfg.scene.novel_view_pose.theta = get_or(p, "theta", 0.0);
            cfg.scene.novel_view_pose.phi = get_or(p, "phi", 0.0);
        }
    }
    if (doc.contains("policy")) {
        const auto& p = doc.at("policy");
        cfg.policy.kind =
            detail_cfg::parse_policy_kind(get_or<std::string>(p, "kind", "threshold"));
        cfg.policy.gamma_mat_ms = get_or(p, "gamma_mat_ms", cfg.policy.gamma_mat_ms);
        cfg.policy.train_episodes = get_or<long>(p, "train_episodes", cfg.policy.train_episodes);
        cfg.policy.checkpoint_path =
            get_or<std::string>(p, "checkpoint_path", cfg.policy.checkpoint_path);
        if (p.contains("ppo")) {
            const auto& q = p.at("ppo");
            auto& ppo = cfg.policy.ppo;
            ppo.hidden_width = get_or(q, "hidden_width", ppo.hidden_width);
            ppo.clip_eps = get_or(q, "clip_eps", ppo.clip_eps);
            ppo.learning_rate = get_or(q, "learning_rate", ppo.learning_rate);
            ppo.batch_size = get_or(q, "batch_size", ppo.batch_size);
            ppo.update_epochs = get_or(q, "update_epochs", ppo.update_epochs);
            ppo.value_learning_rate = get_or(q, "value_learning_rate", ppo.value_learning_rate);
            ppo.value_epochs = get_or(q, "value_epochs", ppo.value_epochs);
            ppo.value_replay = get_or(q, "value_replay", ppo.value_replay);
            ppo.feature_gain = get_or(q, "feature_gain", ppo.feature_gain);
            ppo.value_ridge = get_or(q, "value_ridge", ppo.value_ridge);
            ppo.value_ridge_lambda = get_or(q, "value_ridge_lambda", ppo.value_ridge_lambda);
            ppo.lr_final = get_or(q, "lr_final", ppo.lr_final);
            ppo.lr_decay_updates = get_or(q, "lr_decay_updates", ppo.lr_decay_updates);
            ppo.adam_eps = get_or(q, "adam_eps", ppo.adam_eps);
            ppo.sliding_window = get_or(q, "sliding_window", ppo.sliding_window);
            ppo.policy_avg_tau = get_or(q, "policy_avg_tau", ppo.policy_avg_tau);
            ppo.age_scale_ms = get_or(q, "age_scale_ms", ppo.age_scale_ms);
            ppo.state_clip = get_or(q, "state_clip", ppo.state_clip);
            ppo.init_scale = get_or(q, "init_scale", ppo.init_scale);
            ppo.init_seed = get_or<std::uint64_t>(q, "init_seed", ppo.init_seed);
        }
    }
    cfg.horizon_slots = get_or<long>(doc, "horizon_slots", cfg.horizon_slots);
    cfg.eval_interval_slots = get_or<long>(doc, "eval_interval_slots", cfg.eval_interval_slots);
    cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
    if (doc.contains("reward_weights")) {
        const auto& w = doc.at("reward_weights");
        cfg.reward_weights.w_psnr = get_or(w, "w_psnr", cfg.reward_weights.w_psnr);
        cfg.reward_weights.w_ssim = get_or(w, "w_ssim", cfg.reward_weights.w_ssim);
        cfg.reward_weights.w_lpips = get_or(w, "w_lpips", cfg.reward_weights.w_lpips);
    }
    if (doc.contains("experiment")) {
        const auto& e = doc.at("experiment");
        if (e.contains("gamma_grid_ms"))
            spec.gamma_grid_ms = e.at("gamma_grid_ms").get<std::vector<double>>();
        if (e.contains("delay_grid_ms"))
            spec.delay_grid_ms = e.at("delay_grid_ms").get<std::vector<double>>();
        spec.replications = get_or(e, "replications", spec.replications);
        spec.eval_episodes = get_or<long>(e, "eval_episodes", spec.eval_episodes);
    }
    cfg.policy.ppo.n_cameras = cfg.fleet.n_cameras;
    spec.validate();
    return spec;
}

inline ExperimentSpec load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    nlohmann::json doc;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") {
        doc = toml::parse(text);
    } else {
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
        }
    }
    return experiment_from_json(doc);
}

}  // namespace aoisim
