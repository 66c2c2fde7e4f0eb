#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aoi_sim/channel.hpp"

namespace aoisim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Pose {
    double x = 0.0, y = 0.0, z = 0.0;
    double theta = 0.0;  // [0, 2pi)
    double phi = 0.0;    // [-pi/2, pi/2]
};

struct FrameRecord {
    int camera_id = 0;       // n in [0, N)
    long seq = 0;            // i, per-camera frame index among transmitted frames
    long gen_slot = 0;       // S_i
    long delivery_slot = 0;  // D_i
    long transmission_duration = 0;  // Y_i = D_i - S_i
    Pose pose;
};

enum class TrajectoryKind { Static, CircularOrbit };

struct TrajectoryConfig {
    TrajectoryKind kind = TrajectoryKind::Static;
    double ring_radius = 1.0;
    double height = 0.0;
    double angular_rate = 0.0;  // radians per slot (CircularOrbit)
};

struct FleetConfig {
    int n_cameras = 6;
    long gen_interval_slots = 30;  // C
    double slot_len_ms = 1.0;      // T_s
    long gen_phase_offset = 0;     // per-camera phase: offset * camera_id
    TrajectoryConfig trajectory;

    void validate() const {
        if (n_cameras < 1) throw std::invalid_argument("fleet: n_cameras must be >= 1");
        if (gen_interval_slots < 1) throw std::invalid_argument("fleet: gen_interval must be >= 1");
        if (slot_len_ms <= 0.0) throw std::invalid_argument("fleet: slot_len must be > 0");
    }
};

/// Cameras sit on a ring; camera n at angle 2*pi*n/N looking inward.
inline Pose pose_at(const FleetConfig& cfg, int cam_id, long slot) {
    const double base = kTwoPi * cam_id / cfg.n_cameras;
    double angle = base;
    if (cfg.trajectory.kind == TrajectoryKind::CircularOrbit)
        angle = std::fmod(base + cfg.trajectory.angular_rate * slot, kTwoPi);
    if (angle < 0.0) angle += kTwoPi;
    Pose p;
    p.x = cfg.trajectory.ring_radius * std::cos(angle);
    p.y = cfg.trajectory.ring_radius * std::sin(angle);
    p.z = cfg.trajectory.height;
    p.theta = std::fmod(angle + kTwoPi / 2.0, kTwoPi);  // facing the center
    p.phi = 0.0;
    return p;
}

/// D/G/1/0 camera: one frame in flight at most, new frames dropped while busy.
class CameraState {
public:
    CameraState(int cam_id, std::uint64_t master_seed)
        : cam_id_(cam_id), rng_(derive_seed(master_seed, 0x100 + cam_id)) {}

    int camera_id() const { return cam_id_; }
    long generated() const { return generated_; }
    long dropped() const { return dropped_; }
    long delivered() const { return delivered_; }
    bool busy() const { return in_flight_.has_value(); }
    Rng& rng() { return rng_; }

    /// Advances camera to slot t. Delivery is processed before generation, so
    /// a frame generated the slot a delivery completes is transmitted.
    /// Returns the delivered frame, if any, for this slot.
    std::optional<FrameRecord> tick(long slot, const FleetConfig& fleet,
                                    const ChannelConfig& channel, const ChannelState& ch_state) {
        std::optional<FrameRecord> delivery;
        if (in_flight_ && in_flight_->delivery_slot == slot) {
            delivery = *in_flight_;
            in_flight_.reset();
            ++delivered_;
        }
        const long phase = (cfg_phase(fleet) * cam_id_) % fleet.gen_interval_slots;
        if (slot >= phase && (slot - phase) % fleet.gen_interval_slots == 0) {
            ++generated_;
            if (in_flight_) {
                ++dropped_;
            } else {
                FrameRecord frame;
                frame.camera_id = cam_id_;
                frame.seq = next_seq_++;
                frame.gen_slot = slot;
                frame.transmission_duration =
                    sample_transmission_delay(ch_state, channel, fleet.slot_len_ms, rng_);
                frame.delivery_slot = slot + frame.transmission_duration;
                frame.pose = pose_at(fleet, cam_id_, slot);
                in_flight_ = frame;
            }
        }
        return delivery;
    }

private:
    static long cfg_phase(const FleetConfig& fleet) {
        return fleet.gen_phase_offset % fleet.gen_interval_slots;
    }
    int cam_id_;
    Rng rng_;
    std::optional<FrameRecord> in_flight_;
    long next_seq_ = 0;
    long generated_ = 0;
    long dropped_ = 0;
    long delivered_ = 0;
};

struct FleetStats {
    long generated = 0;
    long dropped = 0;
    long delivered = 0;
};

inline double drop_rate(const FleetStats& stats) {
    if (stats.generated < 1)
        throw std::invalid_argument("drop_rate: no generations recorded");
    return static_cast<double>(stats.dropped) / static_cast<double>(stats.generated);
}

}  // namespace aoisim
