#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoi_sim/aoi.hpp"
#include "aoi_sim/nn.hpp"

namespace aoisim {

using SelectionMask = std::vector<std::uint8_t>;  // omega, one bit per camera

struct ThresholdPolicyCfg {
    double gamma_mat_ms = 51.0;  // Gamma
};

/// omega_n = 1 iff the camera is seeded and its age is strictly below Gamma.
inline SelectionMask threshold_select(const AoiVector& aoi, double slot_len_ms,
                                      const ThresholdPolicyCfg& cfg) {
    SelectionMask mask(aoi.ages.size(), 0);
    for (std::size_t n = 0; n < aoi.ages.size(); ++n) {
        const double age_ms = aoi.ages[n].age_slots * slot_len_ms;
        mask[n] = (aoi.ages[n].seeded && age_ms < cfg.gamma_mat_ms) ? 1 : 0;
    }
    return mask;
}

struct PpoConfig {
    int n_cameras = 6;
    int hidden_width = 64;
    double clip_eps = 0.2;
    double learning_rate = 0.01;
    int batch_size = 32;          // episodes per update batch / window length
    int update_epochs = 1;        // policy passes over each batch
    double value_learning_rate = 0.02;
    int value_epochs = 12;        // value regression steps per batch
    int value_replay = 256;       // recent samples kept for value regression
    double feature_gain = 5.0;    // slope of the per-camera age ramps at init
    // When set, the value output layer is refit in closed form (ridge
    // least squares on the replay window over the fixed hidden features)
    // instead of descending the squared error. value_ridge_lambda is the
    // regularizer; value_epochs/value_learning_rate apply when disabled.
    bool value_ridge = true;
    double value_ridge_lambda = 1e-3;
    // Step-size schedule: policy lr anneals linearly to lr_final over the
    // first lr_decay_updates updates (0 disables the schedule).
    double lr_final = 0.003;
    int lr_decay_updates = 500;
    // Adam denominator floor. Large values damp parameters whose gradients
    // are pure noise instead of stepping them at full rate.
    double adam_eps = 1e-8;
    // Sliding-window updates: take one clipped step after every episode on
    // the window of the last batch_size episodes, instead of one step per
    // disjoint batch. Older window entries have ratios away from 1, so the
    // clip term actually engages, and the policy gets an update per episode.
    bool sliding_window = true;
    // Polyak/EMA averaging of the policy parameters across updates; the
    // averaged parameters become the frozen policy returned by train().
    // Zero disables averaging (the last iterate is frozen as-is).
    double policy_avg_tau = 0.98;
    double age_scale_ms = 120.0;  // state normalization divisor
    double state_clip = 4.0;      // normalized ages clipped to [0, state_clip]
    double init_scale = 0.1;
    std::uint64_t init_seed = 7;
};

struct TransitionSample {
    std::vector<double> state;  // normalized AoI
    SelectionMask action;
    double reward = 0.0;
    double behavior_prob = 0.0;  // pi_{theta_t}(a|s) recorded at sampling time
};

inline std::vector<double> normalize_state(const std::vector<double>& ages_ms,
                                           const PpoConfig& cfg) {
    std::vector<double> s(ages_ms.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = std::min(ages_ms[i] / cfg.age_scale_ms, cfg.state_clip);
    return s;
}

/// Joint probability of a factored Bernoulli action.
inline double action_probability(const std::vector<double>& rho, const SelectionMask& action) {
    double p = 1.0;
    for (std::size_t n = 0; n < rho.size(); ++n)
        p *= action[n] ? rho[n] : (1.0 - rho[n]);
    return p;
}

inline SelectionMask sample_action(const std::vector<double>& rho, Rng& rng, double* prob_out) {
    SelectionMask a(rho.size(), 0);
    for (std::size_t n = 0; n < rho.size(); ++n) a[n] = rng.bernoulli(rho[n]) ? 1 : 0;
    if (prob_out) *prob_out = action_probability(rho, a);
    return a;
}

/// Mode of the factored Bernoulli distribution: select camera n iff rho_n > 1/2.
inline SelectionMask greedy_action(const std::vector<double>& rho) {
    SelectionMask a(rho.size(), 0);
    for (std::size_t n = 0; n < rho.size(); ++n) a[n] = rho[n] > 0.5 ? 1 : 0;
    return a;
}

/// Policy network (per-camera selection probabilities) plus value baseline,
/// updated by the clipped-surrogate rule, one gradient step per batch.
class PpoAgent {
public:
    explicit PpoAgent(const PpoConfig& cfg)
        : cfg_(cfg), init_rng_(derive_seed(cfg.init_seed, 0x9909)),
          policy_(cfg.n_cameras, cfg.hidden_width, cfg.n_cameras,
                  nn::OutputActivation::Sigmoid, init_rng_, cfg.init_scale),
          value_(cfg.n_cameras, cfg.hidden_width, 1, nn::OutputActivation::Identity,
                 init_rng_, cfg.init_scale),
          policy_opt_(policy_.n_params(), cfg.learning_rate, 0.9, 0.999, cfg.adam_eps),
          value_opt_(value_.n_params(), cfg.value_learning_rate, 0.9, 0.999, cfg.adam_eps) {
        align_first_layer(policy_, cfg_);
        align_first_layer(value_, cfg_);
    }

    const PpoConfig& config() const { return cfg_; }
    const nn::Mlp& policy_net() const { return policy_; }
    nn::Mlp& policy_net() { return policy_; }
    const nn::Mlp& value_net() const { return value_; }
    nn::Mlp& value_net() { return value_; }

    std::vector<double> policy_forward(const std::vector<double>& state_norm) const {
        return policy_.forward(state_norm);
    }

    double value_forward(const std::vector<double>& state_norm) const {
        return value_.forward(state_norm)[0];
    }

    double advantage(const TransitionSample& sample) const {
        // Single-step regime: Q(s, a) is the immediate reward, so A = r - V(s).
        return sample.reward - value_forward(sample.state);
    }

    /// Raw advantages standardized across the batch. Without this every early
    /// advantage shares the sign of the reward (V starts near zero), and Adam's
    /// normalized steps saturate the policy on whichever actions were sampled
    /// first. Treated as constants by the policy gradient.
    std::vector<double> batch_advantages(const std::vector<TransitionSample>& batch) const {
        std::vector<double> adv(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) adv[i] = advantage(batch[i]);
        if (adv.size() < 2) return adv;
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean /= static_cast<double>(adv.size());
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(adv.size()));
        // The tiny floor only guards against division by zero when every
        // advantage in the batch is identical.
        for (double& a : adv) a = (a - mean) / std::max(sd, 1e-8);
        return adv;
    }

    /// One ascent step on the clipped surrogate over the batch, then one
    /// descent step on the value net's squared error toward the rewards.
    void ppo_update(const std::vector<TransitionSample>& batch) {
        if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
        auto pgrads = policy_.zero_gradients();
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        // Advantages use the value net as it stood before this update, so the
        // baseline cannot absorb the very rewards the policy step learns from.
        const auto advantages = batch_advantages(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& sample = batch[i];
            nn::Mlp::Trace ptrace;
            const auto rho = policy_.forward(sample.state, &ptrace);
            const double pi = action_probability(rho, sample.action);
            const double ratio = pi / sample.behavior_prob;
            const double adv = advantages[i];

            // min(ratio*A, clip(ratio)*A): when the clipped branch is strictly
            // smaller and saturated, the gradient vanishes.
            const double clipped = std::clamp(ratio, 1.0 - cfg_.clip_eps, 1.0 + cfg_.clip_eps);
            const bool clip_active = clipped * adv < ratio * adv &&
                                     (ratio < 1.0 - cfg_.clip_eps || ratio > 1.0 + cfg_.clip_eps);
            if (!clip_active) {
                // d(ratio*A)/dz_n = (ratio*A) * dlog(pi)/dz_n = ratio*A*(a_n - rho_n)
                std::vector<double> dz(rho.size());
                for (std::size_t n = 0; n < rho.size(); ++n)
                    dz[n] = ratio * adv * (static_cast<double>(sample.action[n]) - rho[n]) * inv_n;
                policy_.backward(ptrace, dz, pgrads);
            }
        }
        require_finite(pgrads, "policy");
        if (cfg_.lr_decay_updates > 0) {
            const double frac = std::min(1.0, static_cast<double>(update_count_) /
                                                  static_cast<double>(cfg_.lr_decay_updates));
            policy_opt_.set_learning_rate(cfg_.learning_rate +
                                          frac * (cfg_.lr_final - cfg_.learning_rate));
        }
        ++update_count_;
        policy_opt_.step(policy_, pgrads, +1.0);  // ascent on the surrogate

        // The baseline is ordinary squared-error regression, so it may take
        // several descent steps and see more than the current batch; sixteen
        // points cannot pin down a function of six ages, and an unconverged
        // baseline makes the advantages swing with its fitting error. A short
        // replay window keeps the targets close to the current policy.
        for (const auto& sample : batch) {
            value_replay_.push_back({sample.state, sample.reward});
            if (static_cast<int>(value_replay_.size()) > std::max(1, cfg_.value_replay))
                value_replay_.erase(value_replay_.begin());
        }
        if (cfg_.value_ridge) {
            fit_value_ridge();
        } else {
            const double inv_r = 1.0 / static_cast<double>(value_replay_.size());
            for (int epoch = 0; epoch < std::max(1, cfg_.value_epochs); ++epoch) {
                auto vgrads = value_.zero_gradients();
                for (const auto& [state, reward] : value_replay_) {
                    nn::Mlp::Trace vtrace;
                    const double v = value_.forward(state, &vtrace)[0];
                    value_.backward(vtrace, {(v - reward) * inv_r}, vgrads);
                }
                require_finite(vgrads, "value");
                value_opt_.step(value_, vgrads, -1.0);  // descent on the squared error
            }
        }
    }

    nlohmann::json checkpoint() const {
        return {{"policy", policy_.to_json()},
                {"value", value_.to_json()},
                {"config",
                 {{"n_cameras", cfg_.n_cameras},
                  {"hidden_width", cfg_.hidden_width},
                  {"clip_eps", cfg_.clip_eps},
                  {"learning_rate", cfg_.learning_rate},
                  {"batch_size", cfg_.batch_size},
                  {"update_epochs", cfg_.update_epochs},
                  {"value_learning_rate", cfg_.value_learning_rate},
                  {"value_epochs", cfg_.value_epochs},
                  {"feature_gain", cfg_.feature_gain},
                  {"lr_final", cfg_.lr_final},
                  {"lr_decay_updates", cfg_.lr_decay_updates},
                  {"sliding_window", cfg_.sliding_window},
                  {"policy_avg_tau", cfg_.policy_avg_tau},
                  {"age_scale_ms", cfg_.age_scale_ms},
                  {"state_clip", cfg_.state_clip}}}};
    }

    static PpoAgent from_checkpoint(const nlohmann::json& j) {
        PpoConfig cfg;
        const auto& jc = j.at("config");
        cfg.n_cameras = jc.at("n_cameras").get<int>();
        cfg.hidden_width = jc.at("hidden_width").get<int>();
        cfg.clip_eps = jc.at("clip_eps").get<double>();
        cfg.learning_rate = jc.at("learning_rate").get<double>();
        cfg.batch_size = jc.at("batch_size").get<int>();
        cfg.update_epochs = jc.value("update_epochs", cfg.update_epochs);
        cfg.value_learning_rate = jc.value("value_learning_rate", cfg.value_learning_rate);
        cfg.value_epochs = jc.value("value_epochs", cfg.value_epochs);
        cfg.feature_gain = jc.value("feature_gain", cfg.feature_gain);
        cfg.lr_final = jc.value("lr_final", cfg.lr_final);
        cfg.lr_decay_updates = jc.value("lr_decay_updates", cfg.lr_decay_updates);
        cfg.sliding_window = jc.value("sliding_window", cfg.sliding_window);
        cfg.policy_avg_tau = jc.value("policy_avg_tau", cfg.policy_avg_tau);
        cfg.age_scale_ms = jc.at("age_scale_ms").get<double>();
        cfg.state_clip = jc.at("state_clip").get<double>();
        PpoAgent agent(cfg);
        agent.policy_ = nn::Mlp::from_json(j.at("policy"));
        agent.value_ = nn::Mlp::from_json(j.at("value"));
        return agent;
    }

private:
    /// Rewrites the hidden layer as per-camera age ramps: unit j reads only
    /// input j mod N through tanh(gain·(s − offset)), with offsets spread over
    /// the normalized-age range. A randomly initialized hidden layer mixes all
    /// cameras, so the age-conditional selection rule is invisible to the
    /// first-order updates available within the episode budget; the drift of
    /// the output biases then kills the policy before the rule emerges.
    /// Aligned features make the rule first-order in the output weights
    /// (which stay small and random, so ρ starts near 0.5).
    static void align_first_layer(nn::Mlp& net, const PpoConfig& cfg) {
        const int n_in = net.n_in();
        const int n_hidden = net.n_hidden();
        const int tiers = std::max(1, n_hidden / n_in);
        const double gain = cfg.feature_gain;
        for (int j = 0; j < n_hidden; ++j) {
            const int cam = j % n_in;
            const int tier = j / n_in;
            const double offset =
                tiers > 1 ? 0.1 + 1.4 * static_cast<double>(std::min(tier, tiers - 1)) /
                                      static_cast<double>(tiers - 1)
                          : 0.75;
            for (int i = 0; i < n_in; ++i)
                net.set_param(static_cast<std::size_t>(j) * n_in + i, i == cam ? gain : 0.0);
            net.set_param(static_cast<std::size_t>(n_hidden) * n_in + j, -gain * offset);
        }
    }

    /// Exact least-squares fit of the value output layer (weights + bias)
    /// over the replay window, hidden layer held at its aligned features.
    void fit_value_ridge() {
        const int h = value_.n_hidden();
        const int d = h + 1;  // + intercept
        std::vector<double> xtx(static_cast<std::size_t>(d) * d, 0.0);
        std::vector<double> xty(d, 0.0);
        std::vector<double> feat(d);
        for (const auto& [state, reward] : value_replay_) {
            nn::Mlp::Trace trace;
            value_.forward(state, &trace);
            for (int j = 0; j < h; ++j) feat[j] = trace.hidden[j];
            feat[h] = 1.0;
            for (int a = 0; a < d; ++a) {
                for (int b = a; b < d; ++b) xtx[static_cast<std::size_t>(a) * d + b] += feat[a] * feat[b];
                xty[a] += feat[a] * reward;
            }
        }
        for (int a = 0; a < d; ++a) {
            xtx[static_cast<std::size_t>(a) * d + a] +=
                cfg_.value_ridge_lambda * static_cast<double>(value_replay_.size());
            for (int b = 0; b < a; ++b)
                xtx[static_cast<std::size_t>(a) * d + b] = xtx[static_cast<std::size_t>(b) * d + a];
        }
        // Gaussian elimination with partial pivoting.
        for (int col = 0; col < d; ++col) {
            int piv = col;
            for (int r = col + 1; r < d; ++r)
                if (std::abs(xtx[static_cast<std::size_t>(r) * d + col]) >
                    std::abs(xtx[static_cast<std::size_t>(piv) * d + col]))
                    piv = r;
            if (piv != col) {
                for (int c = 0; c < d; ++c)
                    std::swap(xtx[static_cast<std::size_t>(col) * d + c],
                              xtx[static_cast<std::size_t>(piv) * d + c]);
                std::swap(xty[col], xty[piv]);
            }
            const double diag = xtx[static_cast<std::size_t>(col) * d + col];
            if (std::abs(diag) < 1e-12)
                throw std::runtime_error("fit_value_ridge: singular normal equations");
            for (int r = col + 1; r < d; ++r) {
                const double f = xtx[static_cast<std::size_t>(r) * d + col] / diag;
                if (f == 0.0) continue;
                for (int c = col; c < d; ++c)
                    xtx[static_cast<std::size_t>(r) * d + c] -=
                        f * xtx[static_cast<std::size_t>(col) * d + c];
                xty[r] -= f * xty[col];
            }
        }
        std::vector<double> beta(d);
        for (int r = d - 1; r >= 0; --r) {
            double acc = xty[r];
            for (int c = r + 1; c < d; ++c)
                acc -= xtx[static_cast<std::size_t>(r) * d + c] * beta[c];
            beta[r] = acc / xtx[static_cast<std::size_t>(r) * d + r];
        }
        const std::size_t w2_off =
            static_cast<std::size_t>(h) * value_.n_in() + static_cast<std::size_t>(h);
        for (int j = 0; j < h; ++j) value_.set_param(w2_off + j, beta[j]);
        value_.set_param(w2_off + h, beta[h]);  // output bias
    }

    static void require_finite(const nn::Mlp::Gradients& g, const char* which) {
        for (const auto* vec : {&g.w1, &g.b1, &g.w2, &g.b2})
            for (double x : *vec)
                if (!std::isfinite(x))
                    throw std::runtime_error(std::string("ppo_update: non-finite gradient in ") +
                                             which + " network; step aborted");
    }

    PpoConfig cfg_;
    long update_count_ = 0;
    std::vector<std::pair<std::vector<double>, double>> value_replay_;
    Rng init_rng_;
    nn::Mlp policy_;
    nn::Mlp value_;
    nn::AdamOptimizer policy_opt_;
    nn::AdamOptimizer value_opt_;
};

/// One-decision environment: a state, an action, a reward.
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::vector<double> begin_episode() = 0;  // raw ages in ms
    virtual double act(const SelectionMask& action) = 0;
    // Diagnostics for the training trace; zero when not applicable.
    virtual double last_psnr() const { return 0.0; }
    virtual double last_ssim() const { return 0.0; }
};

struct EpisodeLog {
    long episode = 0;
    double reward = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct TrainResult {
    std::vector<EpisodeLog> trace;
};

/// Algorithm: per episode, observe AoI state, sample the factored Bernoulli
/// action, collect the reward, and take one clipped policy step plus one
/// value fit.
///
/// With sliding_window on, the update batch is the window of the last
/// batch_size episodes and a step is taken after every episode; otherwise
/// the classic disjoint-batch schedule is used (one step per batch_size
/// episodes). With policy_avg_tau > 0 the per-update EMA of the policy
/// parameters is written back into the agent at the end, so the trained
/// agent exposes the averaged (less noisy) policy rather than the final
/// stochastic-gradient iterate.
inline TrainResult train(PpoAgent& agent, Environment& env, long episodes,
                         std::uint64_t seed) {
    const PpoConfig& cfg = agent.config();
    Rng rng(derive_seed(seed, 0x77a1));
    TrainResult result;
    result.trace.reserve(episodes);
    std::vector<TransitionSample> window;
    window.reserve(cfg.batch_size);
    const double tau = cfg.policy_avg_tau;
    std::vector<double> avg(tau > 0.0 ? agent.policy_net().n_params() : 0, 0.0);
    double avg_norm = 0.0;
    for (long ep = 0; ep < episodes; ++ep) {
        const auto ages_ms = env.begin_episode();
        TransitionSample sample;
        sample.state = normalize_state(ages_ms, cfg);
        const auto rho = agent.policy_forward(sample.state);
        sample.action = sample_action(rho, rng, &sample.behavior_prob);
        sample.reward = env.act(sample.action);
        result.trace.push_back({ep, sample.reward, env.last_psnr(), env.last_ssim()});
        window.push_back(std::move(sample));
        if (static_cast<int>(window.size()) > cfg.batch_size)
            window.erase(window.begin());
        const bool step_now = cfg.sliding_window
                                  ? true
                                  : static_cast<int>(window.size()) >= cfg.batch_size;
        if (step_now) {
            // The clipped ratio makes the batch reusable off-policy, so it can
            // be optimized over more than once before collecting more data.
            for (int epoch = 0; epoch < cfg.update_epochs; ++epoch)
                agent.ppo_update(window);
            if (!cfg.sliding_window) window.clear();
            if (tau > 0.0) {
                avg_norm = tau * avg_norm + 1.0;
                for (std::size_t k = 0; k < avg.size(); ++k)
                    avg[k] = tau * avg[k] + agent.policy_net().get_param(k);
            }
        }
    }
    if (tau > 0.0 && avg_norm > 0.0)
        for (std::size_t k = 0; k < avg.size(); ++k)
            agent.policy_net().set_param(k, avg[k] / avg_norm);
    return result;
}

}  // namespace aoisim
