#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "aoi_sim/sources.hpp"

namespace aoisim {

struct AgeEntry {
    long age_slots = 0;
    bool seeded = false;  // false until the camera's first delivery
};

/// Per-camera AoI vector; the RL state.
struct AoiVector {
    std::vector<AgeEntry> ages;

    std::vector<double> ages_ms(double slot_len_ms) const {
        std::vector<double> out(ages.size());
        for (std::size_t i = 0; i < ages.size(); ++i)
            out[i] = ages[i].age_slots * slot_len_ms;
        return out;
    }
};

/// Latest delivered frame per camera: U^n(t) = max{S_i : D_i <= t}.
class LatestFrameRegistry {
public:
    explicit LatestFrameRegistry(int n_cameras, long epoch_slot = 0)
        : latest_(n_cameras), epoch_slot_(epoch_slot) {}

    int n_cameras() const { return static_cast<int>(latest_.size()); }

    const std::optional<FrameRecord>& latest(int cam_id) const { return latest_[cam_id]; }

    /// Keeps the frame with the greatest gen_slot (max semantics; stale
    /// replays are ignored).
    void on_delivery(const FrameRecord& frame) {
        auto& slot = latest_[frame.camera_id];
        if (!slot || frame.gen_slot > slot->gen_slot) slot = frame;
    }

    /// AoI per camera: delta = t - U^n(t); unseeded cameras age from epoch.
    AoiVector aoi(long t) const {
        AoiVector out;
        out.ages.resize(latest_.size());
        for (std::size_t n = 0; n < latest_.size(); ++n) {
            if (latest_[n]) {
                if (t < latest_[n]->delivery_slot)
                    throw std::invalid_argument("aoi: t precedes a stored delivery");
                out.ages[n] = {t - latest_[n]->gen_slot, true};
            } else {
                out.ages[n] = {t - epoch_slot_, false};
            }
        }
        return out;
    }

private:
    std::vector<std::optional<FrameRecord>> latest_;
    long epoch_slot_;
};

}  // namespace aoisim
