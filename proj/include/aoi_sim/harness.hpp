#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aoi_sim/config.hpp"
#include "aoi_sim/simulator.hpp"

namespace aoisim {

// ---------------------------------------------------------------- statistics

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev; 0 for a single observation
};

inline Summary summarize(const std::vector<double>& xs) {
    Summary s;
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / xs.size();
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / (xs.size() - 1));
    }
    return s;
}

/// Welford one-pass mean/std, kept as an independent cross-check of
/// summarize() in the test suite.
inline Summary summarize_welford(const std::vector<double>& xs) {
    Summary s;
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    s.mean = n ? mean : 0.0;
    s.stddev = n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0;
    return s;
}

// ---------------------------------------------------------------- worker pool

inline int worker_count() {
    if (const char* env = std::getenv("AOI_SIM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, n) on the pool. Results must be written to
/// pre-sized slots so the output is independent of scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : threads) t.join();
}

// ---------------------------------------------------------------- run scoring

struct RunScore {
    double psnr = 0.0;
    double ssim = 0.0;
    double reward = 0.0;
};

/// Mean fidelity over all evaluation slots of one replication.
inline RunScore score_run(const SimConfig& cfg, const PolicyFn& policy) {
    Simulator sim(cfg);
    double psnr = 0.0, ssim = 0.0, reward = 0.0;
    long count = 0;
    sim.run(policy, [&](const SlotRecord& r) {
        psnr += r.psnr;
        ssim += r.ssim;
        reward += r.reward;
        ++count;
    });
    if (count == 0) return {};
    return {psnr / count, ssim / count, reward / count};
}

inline std::uint64_t task_seed(std::uint64_t master, std::uint64_t axis_tag, int replication) {
    return derive_seed(derive_seed(master, axis_tag), 0x5eed0000ULL + replication);
}

// ---------------------------------------------------------------- MAT sweep

struct TradeoffCurve {
    std::vector<double> gamma_ms;
    std::vector<Summary> psnr, ssim, reward;
    double gamma_star_ms = 0.0;        // argmax of mean PSNR, smallest on ties
    double gamma_star_reward_ms = 0.0; // argmax of mean reward, smallest on ties
    double best_reward_mean = 0.0;
};

inline ThresholdPolicyCfg threshold_cfg(double gamma) { return {gamma}; }

inline TradeoffCurve sweep_mat(const ExperimentSpec& spec) {
    spec.validate();
    const auto& grid = spec.gamma_grid_ms;
    const int reps = spec.replications;
    std::vector<RunScore> scores(grid.size() * reps);
    parallel_for(scores.size(), [&](std::size_t task) {
        const std::size_t gi = task / reps;
        const int rep = static_cast<int>(task % reps);
        SimConfig cfg = spec.base;
        cfg.policy.kind = PolicyKind::Threshold;
        cfg.policy.gamma_mat_ms = grid[gi];
        cfg.seed = task_seed(spec.base.seed, 0x3a7 + static_cast<std::uint64_t>(gi), rep);
        scores[task] = score_run(cfg, make_policy_fn(cfg.policy));
    });
    TradeoffCurve curve;
    curve.gamma_ms = grid;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        std::vector<double> p, s, r;
        for (int rep = 0; rep < reps; ++rep) {
            const auto& sc = scores[gi * reps + rep];
            p.push_back(sc.psnr);
            s.push_back(sc.ssim);
            r.push_back(sc.reward);
        }
        curve.psnr.push_back(summarize(p));
        curve.ssim.push_back(summarize(s));
        curve.reward.push_back(summarize(r));
    }
    std::size_t best_p = 0, best_r = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
        if (curve.psnr[gi].mean > curve.psnr[best_p].mean) best_p = gi;
        if (curve.reward[gi].mean > curve.reward[best_r].mean) best_r = gi;
    }
    curve.gamma_star_ms = grid[best_p];
    curve.gamma_star_reward_ms = grid[best_r];
    curve.best_reward_mean = curve.reward[best_r].mean;
    return curve;
}

// ---------------------------------------------------------------- delay sweep

struct DelaySweepPoint {
    double mean_delay_ms = 0.0;
    double gamma_star_ms = 0.0;
    TradeoffCurve curve;
};

inline std::vector<DelaySweepPoint> sweep_delay(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<DelaySweepPoint> out;
    for (std::size_t di = 0; di < spec.delay_grid_ms.size(); ++di) {
        ExperimentSpec point = spec;
        point.base.channel.mean_delay_low_ms = spec.delay_grid_ms[di];
        point.base.seed = derive_seed(spec.base.seed, 0xde1a7 + di);
        DelaySweepPoint p;
        p.mean_delay_ms = spec.delay_grid_ms[di];
        p.curve = sweep_mat(point);
        p.gamma_star_ms = p.curve.gamma_star_ms;
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------- burstiness

struct BurstinessReport {
    double mean_psnr_low = 0.0;
    double mean_psnr_high = 0.0;
    double low_steady_psnr = 0.0;
    std::vector<double> recovery_lags_slots;
    double mean_recovery_lag_slots = 0.0;
    double lag_ci_low = 0.0;   // 95% bootstrap CI of the mean lag
    double lag_ci_high = 0.0;
    long n_switches = 0;
    long n_censored = 0;
};

/// Aligns the shared traffic-state trace with the fidelity trace. Recovery
/// lag: slots from a high->low switch until PSNR first re-enters within 5%
/// of the low-traffic steady mean. Lags cut short by the next high period
/// are censored out.
inline BurstinessReport burstiness_report(const ExperimentSpec& spec) {
    spec.validate();
    if (!spec.base.channel.burstiness_enabled)
        throw ConfigError("burstiness: channel.burstiness_enabled must be true");
    BurstinessReport report;
    std::vector<std::vector<SlotRecord>> traces(spec.replications);
    parallel_for(traces.size(), [&](std::size_t rep) {
        SimConfig cfg = spec.base;
        cfg.seed = task_seed(spec.base.seed, 0xb0257, static_cast<int>(rep));
        Simulator sim(cfg);
        const auto policy = make_policy_fn(cfg.policy, &sim);
        traces[rep] = sim.run_collect(policy);
    });

    double low_sum = 0.0, high_sum = 0.0;
    long low_n = 0, high_n = 0;
    for (const auto& trace : traces)
        for (const auto& r : trace) {
            if (r.traffic_state == TrafficState::LowTraffic) {
                low_sum += r.psnr;
                ++low_n;
            } else {
                high_sum += r.psnr;
                ++high_n;
            }
        }
    report.mean_psnr_low = low_n ? low_sum / low_n : 0.0;
    report.mean_psnr_high = high_n ? high_sum / high_n : 0.0;
    report.low_steady_psnr = report.mean_psnr_low;
    const double recover_level = 0.95 * report.low_steady_psnr;

    for (const auto& trace : traces) {
        for (std::size_t i = 1; i < trace.size(); ++i) {
            const bool switched = trace[i - 1].traffic_state == TrafficState::HighTraffic &&
                                  trace[i].traffic_state == TrafficState::LowTraffic;
            if (!switched) continue;
            ++report.n_switches;
            bool recovered = false;
            for (std::size_t j = i; j < trace.size(); ++j) {
                if (trace[j].traffic_state == TrafficState::HighTraffic) break;  // censored
                if (trace[j].psnr >= recover_level) {
                    report.recovery_lags_slots.push_back(
                        static_cast<double>(trace[j].slot - trace[i].slot));
                    recovered = true;
                    break;
                }
            }
            if (!recovered) ++report.n_censored;
        }
    }

    if (!report.recovery_lags_slots.empty()) {
        report.mean_recovery_lag_slots = summarize(report.recovery_lags_slots).mean;
        // Deterministic bootstrap over the pooled lags.
        Rng rng(derive_seed(spec.base.seed, 0xb007));
        const int B = 2000;
        std::vector<double> means;
        means.reserve(B);
        const auto& lags = report.recovery_lags_slots;
        for (int b = 0; b < B; ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < lags.size(); ++k)
                acc += lags[static_cast<std::size_t>(rng.uniform01() * lags.size())];
            means.push_back(acc / lags.size());
        }
        std::sort(means.begin(), means.end());
        report.lag_ci_low = means[static_cast<std::size_t>(0.025 * (B - 1))];
        report.lag_ci_high = means[static_cast<std::size_t>(0.975 * (B - 1))];
    }
    return report;
}

// ---------------------------------------------------------------- PPO harness

struct PpoEvaluation {
    TradeoffCurve threshold_curve;
    double best_threshold_reward = 0.0;
    double best_threshold_gamma_ms = 0.0;
    RunScore threshold_eval;  // best threshold on fresh evaluation episodes
    RunScore ppo_eval;        // frozen PPO on fresh evaluation episodes
    std::vector<EpisodeLog> training_trace;
    long plateau_episode = -1;  // first episode whose trailing-100 mean is
                                // within 2% of the best trailing-100 mean
};

inline long detect_plateau(const std::vector<EpisodeLog>& trace, int window = 100,
                           double tolerance = 0.02) {
    if (static_cast<int>(trace.size()) < window) return -1;
    std::vector<double> trailing;
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        acc += trace[i].reward;
        if (i >= static_cast<std::size_t>(window)) acc -= trace[i - window].reward;
        if (i + 1 >= static_cast<std::size_t>(window)) trailing.push_back(acc / window);
    }
    const double best = *std::max_element(trailing.begin(), trailing.end());
    const double floor = best - tolerance * std::abs(best);
    for (std::size_t i = 0; i < trailing.size(); ++i)
        if (trailing[i] >= floor) return static_cast<long>(i) + window - 1;
    return -1;
}

/// Mean reward of a frozen policy over fresh single-decision episodes.
inline RunScore evaluate_policy_episodes(const SimConfig& cfg, std::uint64_t seed_salt,
                                         long episodes,
                                         const std::function<SelectionMask(
                                             const std::vector<double>&, Rng&)>& decide) {
    SimEnvironment env(cfg, seed_salt);
    Rng rng(derive_seed(cfg.seed, 0xeba1 + seed_salt));
    RunScore score;
    for (long ep = 0; ep < episodes; ++ep) {
        const auto ages_ms = env.begin_episode();
        const auto mask = decide(ages_ms, rng);
        score.reward += env.act(mask);
        score.psnr += env.last_psnr();
        score.ssim += env.last_ssim();
    }
    score.reward /= episodes;
    score.psnr /= episodes;
    score.ssim /= episodes;
    return score;
}

inline PpoEvaluation train_and_eval_ppo(const ExperimentSpec& spec, PpoAgent* agent_out = nullptr,
                                        const TradeoffCurve* precomputed_curve = nullptr) {
    spec.validate();
    PpoEvaluation result;
    result.threshold_curve = precomputed_curve ? *precomputed_curve : sweep_mat(spec);
    result.best_threshold_reward = result.threshold_curve.best_reward_mean;
    result.best_threshold_gamma_ms = result.threshold_curve.gamma_star_reward_ms;

    PpoConfig ppo_cfg = spec.base.policy.ppo;
    ppo_cfg.n_cameras = spec.base.fleet.n_cameras;
    PpoAgent agent(ppo_cfg);
    SimEnvironment train_env(spec.base, /*seed_salt=*/0);
    const auto train_result = train(agent, train_env, spec.base.policy.train_episodes,
                                    spec.base.seed);
    result.training_trace = train_result.trace;
    result.plateau_episode = detect_plateau(result.training_trace);

    const double slot_ms = spec.base.fleet.slot_len_ms;
    // The frozen policy is deterministic: the mode of the learned action
    // distribution. The Bernoulli sampling is an exploration device during
    // training, not part of the deployed selection rule.
    result.ppo_eval = evaluate_policy_episodes(
        spec.base, /*seed_salt=*/1, spec.eval_episodes,
        [&](const std::vector<double>& ages_ms, Rng&) {
            const auto state = normalize_state(ages_ms, agent.config());
            return greedy_action(agent.policy_forward(state));
        });
    const ThresholdPolicyCfg best_thr{result.best_threshold_gamma_ms};
    result.threshold_eval = evaluate_policy_episodes(
        spec.base, /*seed_salt=*/1, spec.eval_episodes,
        [&](const std::vector<double>& ages_ms, Rng&) {
            SelectionMask mask(ages_ms.size(), 0);
            for (std::size_t n = 0; n < ages_ms.size(); ++n)
                mask[n] = ages_ms[n] < best_thr.gamma_mat_ms ? 1 : 0;
            (void)slot_ms;
            return mask;
        });
    if (agent_out) *agent_out = std::move(agent);
    return result;
}

// ---------------------------------------------------------------- CSV output

/// Shortest round-trip decimal representation, so emitted CSVs reload to
/// bit-identical doubles.
inline std::string format_double(double v) {
    char buf[40];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Prefer the shortest form that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

inline std::string sweep_csv(const TradeoffCurve& curve) {
    std::string out = "gamma_ms,psnr_mean,psnr_std,ssim_mean,ssim_std,reward_mean,reward_std\n";
    for (std::size_t i = 0; i < curve.gamma_ms.size(); ++i) {
        out += format_double(curve.gamma_ms[i]) + "," + format_double(curve.psnr[i].mean) + "," +
               format_double(curve.psnr[i].stddev) + "," + format_double(curve.ssim[i].mean) +
               "," + format_double(curve.ssim[i].stddev) + "," +
               format_double(curve.reward[i].mean) + "," + format_double(curve.reward[i].stddev) +
               "\n";
    }
    return out;
}

inline TradeoffCurve parse_sweep_csv(const std::string& text) {
    TradeoffCurve curve;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (vals.size() != 7) throw std::runtime_error("sweep csv: expected 7 columns");
        curve.gamma_ms.push_back(vals[0]);
        curve.psnr.push_back({vals[1], vals[2]});
        curve.ssim.push_back({vals[3], vals[4]});
        curve.reward.push_back({vals[5], vals[6]});
    }
    return curve;
}

inline std::string delay_sweep_csv(const std::vector<DelaySweepPoint>& points) {
    std::string out = "mean_delay_ms,gamma_star_ms\n";
    for (const auto& p : points)
        out += format_double(p.mean_delay_ms) + "," + format_double(p.gamma_star_ms) + "\n";
    return out;
}

inline std::string training_trace_csv(const std::vector<EpisodeLog>& trace) {
    std::string out = "episode,reward,psnr,ssim\n";
    for (const auto& e : trace)
        out += std::to_string(e.episode) + "," + format_double(e.reward) + "," +
               format_double(e.psnr) + "," + format_double(e.ssim) + "\n";
    return out;
}

inline std::string burstiness_csv(const BurstinessReport& r) {
    std::string out =
        "mean_psnr_low,mean_psnr_high,mean_recovery_lag_slots,lag_ci_low,lag_ci_high,"
        "n_switches,n_recovered,n_censored\n";
    out += format_double(r.mean_psnr_low) + "," + format_double(r.mean_psnr_high) + "," +
           format_double(r.mean_recovery_lag_slots) + "," + format_double(r.lag_ci_low) + "," +
           format_double(r.lag_ci_high) + "," + std::to_string(r.n_switches) + "," +
           std::to_string(static_cast<long>(r.recovery_lags_slots.size())) + "," +
           std::to_string(r.n_censored) + "\n";
    return out;
}

inline std::string slot_records_csv(const std::vector<SlotRecord>& records, int n_cameras) {
    std::string out = "slot";
    for (int n = 1; n <= n_cameras; ++n) out += ",aoi_" + std::to_string(n);
    for (int n = 1; n <= n_cameras; ++n) out += ",omega_" + std::to_string(n);
    out += ",psnr,ssim,reward,traffic_state,deliveries,drops\n";
    for (const auto& r : records) {
        out += std::to_string(r.slot);
        for (const auto& age : r.aoi.ages) out += "," + std::to_string(age.age_slots);
        for (auto m : r.mask) out += "," + std::to_string(static_cast<int>(m));
        out += "," + format_double(r.psnr) + "," + format_double(r.ssim) + "," +
               format_double(r.reward) + "," +
               (r.traffic_state == TrafficState::LowTraffic ? "low" : "high") + "," +
               std::to_string(r.deliveries) + "," + std::to_string(r.drops) + "\n";
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

// ---------------------------------------------------------------- SVG output

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x, y;
};

/// Bare-bones line chart; the CSVs are the primary artifact, this is for a
/// quick look.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<SvgSeries>& series) {
    const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    const auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
        << h - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    svg << "<text x=\"16\" y=\"" << h / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << h / 2
        << ")\">" << y_label << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        svg << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << format_double(xv)
            << "</text>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(yv) << "</text>\n";
    }
    int legend_y = mt;
    for (const auto& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << w - mr - 4 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << s.color << "\">" << s.label
            << "</text>\n";
        legend_y += 14;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace aoisim
