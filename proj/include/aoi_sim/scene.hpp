#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aoi_sim/image.hpp"
#include "aoi_sim/sources.hpp"

namespace aoisim {

struct Blob {
    double center_x = 0.0;   // pixels, at t = 0
    double center_y = 0.0;
    double velocity_x = 0.0; // pixels per ms
    double velocity_y = 0.0;
    double amplitude = 0.0;  // added intensity at the center
    double radius = 1.0;     // gaussian sigma, pixels
    // 0 => pure linear motion. Otherwise the time axis wraps modulo this
    // period (sawtooth), so the blob drifts at constant velocity, snaps back
    // every period, and stays in frame over arbitrarily long horizons. When
    // velocity * period equals the repeat distance of a blob train, the snap
    // maps the train onto itself and the drift looks continuous.
    double motion_period_ms = 0.0;
};

inline double blob_motion_time(const Blob& b, double t_ms) {
    if (b.motion_period_ms <= 0.0) return t_ms;
    const double phase = std::fmod(t_ms, b.motion_period_ms);
    return phase < 0.0 ? phase + b.motion_period_ms : phase;
}

inline std::pair<double, double> blob_center(const Blob& b, double t_ms) {
    const double tm = blob_motion_time(b, t_ms);
    return {b.center_x + b.velocity_x * tm, b.center_y + b.velocity_y * tm};
}

struct SceneConfig {
    int width = 64;   // L_W
    int height = 64;  // L_H
    int depth_bits = 8;
    std::vector<Blob> blobs;
    double background = 32.0;      // b0
    double stripe_overlap = 0.0;   // fraction of one stripe width, [0, 0.5)
    Pose novel_view_pose;

    void validate() const {
        if (width < 1 || height < 1)
            throw std::invalid_argument("scene: dimensions must be >= 1");
        if (depth_bits < 1 || depth_bits > 16)
            throw std::invalid_argument("scene: depth must be in [1,16] bits");
        if (stripe_overlap < 0.0 || stripe_overlap >= 0.5)
            throw std::invalid_argument("scene: stripe_overlap must be in [0, 0.5)");
        for (const auto& b : blobs)
            if (b.radius <= 0.0)
                throw std::invalid_argument("scene: blob radius must be > 0");
    }
};

inline double scene_intensity(const SceneConfig& cfg, double t_ms, int row, int col) {
    double v = cfg.background;
    for (const auto& b : cfg.blobs) {
        const auto [cx, cy] = blob_center(b, t_ms);
        const double dx = col - cx;
        const double dy = row - cy;
        const double d2 = dx * dx + dy * dy;
        // Beyond 6 sigma the contribution is < amplitude * 2.3e-8, far below
        // half a quantization step, so skip the exp.
        if (d2 > 36.0 * b.radius * b.radius) continue;
        v += b.amplitude * std::exp(-d2 / (2.0 * b.radius * b.radius));
    }
    return v;
}

/// Deterministic ground truth: background plus moving gaussian blobs,
/// clamped to [0, R_I] and rounded to the pixel grid.
inline Image render_ground_truth(const SceneConfig& cfg, double t_ms) {
    cfg.validate();
    Image img(cfg.width, cfg.height, cfg.depth_bits);
    for (int row = 0; row < cfg.height; ++row)
        for (int col = 0; col < cfg.width; ++col)
            img.set(row, col, static_cast<int>(std::lround(scene_intensity(cfg, t_ms, row, col))));
    return img;
}

/// Camera n's partial capture: the ground truth restricted to the camera's
/// column stripe (with optional overlap into the neighbours).
struct Observation {
    int camera_id = 0;
    double gen_time_ms = 0.0;
    Pose pose;
    Image image;                         // uncovered pixels left at 0
    std::vector<std::uint8_t> col_cover; // 1 where the column is observed
};

inline std::vector<std::uint8_t> stripe_columns(const SceneConfig& cfg, int n_cameras,
                                                int cam_id) {
    // Pixel-center membership: column c belongs to the stripe when its center
    // c + 0.5 lies in [n*w - ov, (n+1)*w + ov), w = L_W / N.
    const double w = static_cast<double>(cfg.width) / n_cameras;
    const double ov = cfg.stripe_overlap * w;
    const double lo = cam_id * w - ov;
    const double hi = (cam_id + 1) * w + ov;
    std::vector<std::uint8_t> cover(cfg.width, 0);
    for (int c = 0; c < cfg.width; ++c) {
        const double center = c + 0.5;
        cover[c] = (center >= lo && center < hi) ? 1 : 0;
    }
    return cover;
}

inline Observation observe(const SceneConfig& cfg, int n_cameras, int cam_id, double t_ms,
                           const Pose& pose = {}) {
    if (cam_id < 0 || cam_id >= n_cameras)
        throw std::invalid_argument("observe: camera id out of range");
    Observation obs;
    obs.camera_id = cam_id;
    obs.gen_time_ms = t_ms;
    obs.pose = pose;
    cfg.validate();
    obs.col_cover = stripe_columns(cfg, n_cameras, cam_id);
    Image img(cfg.width, cfg.height, cfg.depth_bits);
    for (int row = 0; row < cfg.height; ++row)
        for (int col = 0; col < cfg.width; ++col)
            if (obs.col_cover[col])
                img.set(row, col,
                        static_cast<int>(std::lround(scene_intensity(cfg, t_ms, row, col))));
    obs.image = img;
    return obs;
}

/// Fuses stale observations into a novel-view image: per-pixel average over
/// covering cameras, background level where nothing covers.
inline Image reconstruct(const SceneConfig& cfg, const std::vector<Observation>& selected,
                         double /*t_ms*/) {
    cfg.validate();
    const int b0 = static_cast<int>(std::lround(cfg.background));
    Image img(cfg.width, cfg.height, cfg.depth_bits, 0);
    std::vector<int> cover_count(cfg.width, 0);
    for (const auto& obs : selected) {
        if (obs.image.width() != cfg.width || obs.image.height() != cfg.height)
            throw std::invalid_argument("reconstruct: observation dimension mismatch");
        for (int c = 0; c < cfg.width; ++c)
            if (obs.col_cover[c]) ++cover_count[c];
    }
    std::vector<double> acc(static_cast<std::size_t>(cfg.width) * cfg.height, 0.0);
    for (const auto& obs : selected)
        for (int row = 0; row < cfg.height; ++row)
            for (int col = 0; col < cfg.width; ++col)
                if (obs.col_cover[col])
                    acc[static_cast<std::size_t>(row) * cfg.width + col] += obs.image.at(row, col);
    for (int row = 0; row < cfg.height; ++row) {
        for (int col = 0; col < cfg.width; ++col) {
            if (cover_count[col] > 0) {
                const double v = acc[static_cast<std::size_t>(row) * cfg.width + col] /
                                 cover_count[col];
                img.set(row, col, static_cast<int>(std::lround(v)));
            } else {
                img.set(row, col, b0);
            }
        }
    }
    return img;
}

/// Memoizes ground-truth and observation renders. When every moving blob
/// has an integer motion period, the scene is periodic with the periods'
/// lcm and renders repeat exactly (fmod is exact for doubles), so a long
/// run touches only a handful of distinct images.
class SceneCache {
public:
    SceneCache(const SceneConfig& cfg, int n_cameras)
        : cfg_(cfg), n_cameras_(n_cameras), cycle_ms_(scene_cycle_ms(cfg)) {}

    const Image& ground_truth(double t_ms) {
        if (cycle_ms_ <= 0.0 || gt_.size() > kMaxEntries) {
            scratch_gt_ = render_ground_truth(cfg_, t_ms);
            return scratch_gt_;
        }
        const double key = std::fmod(t_ms, cycle_ms_);
        auto it = gt_.find(key);
        if (it == gt_.end()) it = gt_.emplace(key, render_ground_truth(cfg_, t_ms)).first;
        return it->second;
    }

    const Observation& observation(int cam_id, double t_ms) {
        if (cycle_ms_ <= 0.0 || obs_.size() > kMaxEntries) {
            scratch_obs_ = observe(cfg_, n_cameras_, cam_id, t_ms);
            return scratch_obs_;
        }
        const std::pair<int, double> key{cam_id, std::fmod(t_ms, cycle_ms_)};
        auto it = obs_.find(key);
        if (it == obs_.end()) it = obs_.emplace(key, observe(cfg_, n_cameras_, cam_id, t_ms)).first;
        return it->second;
    }

    /// lcm of the blob motion periods, or 0 when the scene is not provably
    /// periodic (a moving blob with zero or non-integer period).
    static double scene_cycle_ms(const SceneConfig& cfg) {
        long long cycle = 1;
        for (const auto& b : cfg.blobs) {
            if (b.velocity_x == 0.0 && b.velocity_y == 0.0) continue;
            const double p = b.motion_period_ms;
            const long long pi = static_cast<long long>(std::llround(p));
            if (p <= 0.0 || std::abs(p - static_cast<double>(pi)) > 1e-9) return 0.0;
            cycle = std::lcm(cycle, pi);
            if (cycle > 1'000'000) return 0.0;  // cache would not pay off
        }
        return static_cast<double>(cycle);
    }

private:
    static constexpr std::size_t kMaxEntries = 8192;
    SceneConfig cfg_;
    int n_cameras_;
    double cycle_ms_;
    std::map<double, Image> gt_;
    std::map<std::pair<int, double>, Observation> obs_;
    Image scratch_gt_;
    Observation scratch_obs_;
};

}  // namespace aoisim
