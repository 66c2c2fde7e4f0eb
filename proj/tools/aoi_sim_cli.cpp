// Command-line front end: experiment sweeps, burstiness analysis, PPO
// training, and single runs, emitting CSV tables and SVG charts.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aoi_sim/aoi_sim.hpp"

namespace fs = std::filesystem;
using namespace aoisim;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Config file (JSON or TOML)");
    cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--format", opts.format, "Output format: csv|svg|both")
        ->check(CLI::IsMember({"csv", "svg", "both"}))
        ->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Master seed (overrides config)")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
}

ExperimentSpec load_spec(const CommonOpts& opts) {
    ExperimentSpec spec =
        opts.config_path.empty() ? default_experiment() : load_experiment(opts.config_path);
    if (opts.seed_set) spec.base.seed = opts.seed;
    return spec;
}

bool wants_csv(const CommonOpts& o) { return o.format == "csv" || o.format == "both"; }
bool wants_svg(const CommonOpts& o) { return o.format == "svg" || o.format == "both"; }

void ensure_out(const CommonOpts& o) { fs::create_directories(o.out_dir); }

std::string out_path(const CommonOpts& o, const std::string& name) {
    return (fs::path(o.out_dir) / name).string();
}

void emit_curve_svgs(const CommonOpts& opts, const TradeoffCurve& curve,
                     const std::string& stem) {
    const auto pull = [&](auto member) {
        std::vector<double> ys;
        for (const auto& s : member) ys.push_back(s.mean);
        return ys;
    };
    write_file(out_path(opts, stem + "_psnr.svg"),
               svg_line_chart("PSNR vs MAT", "Gamma (ms)", "PSNR (dB)",
                              {{"psnr_mean", "#1f77b4", curve.gamma_ms, pull(curve.psnr)}}));
    write_file(out_path(opts, stem + "_ssim.svg"),
               svg_line_chart("SSIM vs MAT", "Gamma (ms)", "SSIM",
                              {{"ssim_mean", "#2ca02c", curve.gamma_ms, pull(curve.ssim)}}));
    write_file(out_path(opts, stem + "_reward.svg"),
               svg_line_chart("Reward vs MAT", "Gamma (ms)", "Reward",
                              {{"reward_mean", "#d62728", curve.gamma_ms, pull(curve.reward)}}));
}

int run_sweep_mat(const CommonOpts& opts) {
    const auto spec = load_spec(opts);
    const auto curve = sweep_mat(spec);
    ensure_out(opts);
    if (wants_csv(opts)) write_file(out_path(opts, "sweep_mat.csv"), sweep_csv(curve));
    if (wants_svg(opts)) emit_curve_svgs(opts, curve, "sweep_mat");
    std::cout << "gamma* (psnr) = " << curve.gamma_star_ms
              << " ms, gamma* (reward) = " << curve.gamma_star_reward_ms
              << " ms, best mean reward = " << curve.best_reward_mean << "\n";
    return 0;
}

int run_sweep_delay(const CommonOpts& opts) {
    const auto spec = load_spec(opts);
    const auto points = sweep_delay(spec);
    ensure_out(opts);
    if (wants_csv(opts)) {
        write_file(out_path(opts, "sweep_delay.csv"), delay_sweep_csv(points));
        for (const auto& p : points)
            write_file(out_path(opts, "sweep_mat_delay" +
                                          std::to_string(static_cast<int>(p.mean_delay_ms)) +
                                          ".csv"),
                       sweep_csv(p.curve));
    }
    if (wants_svg(opts)) {
        std::vector<double> xs, ys;
        for (const auto& p : points) {
            xs.push_back(p.mean_delay_ms);
            ys.push_back(p.gamma_star_ms);
        }
        write_file(out_path(opts, "sweep_delay.svg"),
                   svg_line_chart("Optimal MAT vs mean delay", "E[Y] (ms)", "Gamma* (ms)",
                                  {{"gamma_star", "#1f77b4", xs, ys}}));
    }
    for (const auto& p : points)
        std::cout << "E[Y] = " << p.mean_delay_ms << " ms -> gamma* = " << p.gamma_star_ms
                  << " ms\n";
    return 0;
}

int run_burstiness(const CommonOpts& opts) {
    auto spec = load_spec(opts);
    spec.base.channel.burstiness_enabled = true;
    const auto report = burstiness_report(spec);
    ensure_out(opts);
    if (wants_csv(opts)) write_file(out_path(opts, "burstiness.csv"), burstiness_csv(report));
    std::cout << "mean PSNR low/high = " << report.mean_psnr_low << " / "
              << report.mean_psnr_high << " dB\n"
              << "recovery lag mean = " << report.mean_recovery_lag_slots << " slots, 95% CI ["
              << report.lag_ci_low << ", " << report.lag_ci_high << "], switches "
              << report.n_switches << " (censored " << report.n_censored << ")\n";
    return 0;
}

int run_train_ppo(const CommonOpts& opts) {
    const auto spec = load_spec(opts);
    PpoAgent agent(spec.base.policy.ppo);
    const auto eval = train_and_eval_ppo(spec, &agent);
    ensure_out(opts);
    if (wants_csv(opts)) {
        write_file(out_path(opts, "ppo_training.csv"), training_trace_csv(eval.training_trace));
        std::string table = "method,psnr,ssim,reward\n";
        table += "best_threshold," + format_double(eval.threshold_eval.psnr) + "," +
                 format_double(eval.threshold_eval.ssim) + "," +
                 format_double(eval.threshold_eval.reward) + "\n";
        table += "ppo," + format_double(eval.ppo_eval.psnr) + "," +
                 format_double(eval.ppo_eval.ssim) + "," + format_double(eval.ppo_eval.reward) +
                 "\n";
        write_file(out_path(opts, "ppo_comparison.csv"), table);
        write_file(out_path(opts, "sweep_mat.csv"), sweep_csv(eval.threshold_curve));
    }
    if (wants_svg(opts)) {
        std::vector<double> xs, ys;
        for (const auto& e : eval.training_trace) {
            xs.push_back(static_cast<double>(e.episode));
            ys.push_back(e.reward);
        }
        write_file(out_path(opts, "ppo_training.svg"),
                   svg_line_chart("Training reward per episode", "episode", "reward",
                                  {{"reward", "#1f77b4", xs, ys}}));
    }
    std::ofstream ckpt(out_path(opts, "ppo_policy.json"));
    ckpt << agent.checkpoint().dump(2) << "\n";
    std::cout << "best threshold gamma = " << eval.best_threshold_gamma_ms
              << " ms, reward = " << eval.threshold_eval.reward
              << "; ppo reward = " << eval.ppo_eval.reward
              << "; plateau episode = " << eval.plateau_episode << "\n";
    return 0;
}

int run_single(const CommonOpts& opts) {
    const auto spec = load_spec(opts);
    SimConfig cfg = spec.base;
    Simulator sim(cfg);
    PolicyFn policy;
    PpoAgent agent(cfg.policy.ppo);
    if (cfg.policy.kind == PolicyKind::Ppo) {
        if (cfg.policy.checkpoint_path.empty())
            throw ConfigError("run: policy.kind=ppo requires policy.checkpoint_path");
        std::ifstream in(cfg.policy.checkpoint_path);
        if (!in) throw ConfigError("run: cannot open checkpoint '" +
                                   cfg.policy.checkpoint_path + "'");
        nlohmann::json j;
        in >> j;
        agent = PpoAgent::from_checkpoint(j);
        policy = make_ppo_policy_fn(agent, cfg.seed);
    } else {
        policy = make_policy_fn(cfg.policy, &sim);
    }
    const auto records = sim.run_collect(policy);
    ensure_out(opts);
    if (wants_csv(opts))
        write_file(out_path(opts, "run.csv"), slot_records_csv(records, cfg.fleet.n_cameras));
    if (wants_svg(opts)) {
        std::vector<double> xs, ys;
        for (const auto& r : records) {
            xs.push_back(static_cast<double>(r.slot));
            ys.push_back(r.psnr);
        }
        write_file(out_path(opts, "run_psnr.svg"),
                   svg_line_chart("PSNR per evaluation slot", "slot", "PSNR (dB)",
                                  {{"psnr", "#1f77b4", xs, ys}}));
    }
    const auto stats = sim.fleet_stats();
    std::cout << "evaluations = " << records.size() << ", generated = " << stats.generated
              << ", delivered = " << stats.delivered << ", dropped = " << stats.dropped
              << " (drop rate " << (stats.generated ? drop_rate(stats) : 0.0) << ")\n";
    return 0;
}

int run_validate(const CommonOpts& opts) {
    const auto spec = load_spec(opts);
    spec.validate();
    std::cout << "config ok: N=" << spec.base.fleet.n_cameras
              << ", C=" << spec.base.fleet.gen_interval_slots
              << ", horizon=" << spec.base.horizon_slots
              << ", replications=" << spec.replications << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-of-Information frame-selection simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* sweep_mat_cmd = app.add_subcommand("sweep-mat", "Sweep the max-age threshold grid");
    auto* sweep_delay_cmd =
        app.add_subcommand("sweep-delay", "Optimal MAT per mean transmission delay");
    auto* burstiness_cmd =
        app.add_subcommand("burstiness", "Burstiness hysteresis statistics");
    auto* train_cmd = app.add_subcommand("train-ppo", "Train and evaluate the PPO policy");
    auto* run_cmd = app.add_subcommand("run", "One simulation run with the configured policy");
    auto* validate_cmd = app.add_subcommand("validate-config", "Validate a config file");
    for (auto* cmd :
         {sweep_mat_cmd, sweep_delay_cmd, burstiness_cmd, train_cmd, run_cmd, validate_cmd})
        add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (sweep_mat_cmd->parsed()) return run_sweep_mat(opts);
        if (sweep_delay_cmd->parsed()) return run_sweep_delay(opts);
        if (burstiness_cmd->parsed()) return run_burstiness(opts);
        if (train_cmd->parsed()) return run_train_ppo(opts);
        if (run_cmd->parsed()) return run_single(opts);
        if (validate_cmd->parsed()) return run_validate(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
