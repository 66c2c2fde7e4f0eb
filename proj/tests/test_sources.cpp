#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "aoi_sim/sources.hpp"

using namespace aoisim;

namespace {

FleetConfig default_fleet() {
    FleetConfig f;
    f.n_cameras = 6;
    f.gen_interval_slots = 30;
    f.slot_len_ms = 1.0;
    return f;
}

// Independent replay of the D/G/1/0 discipline: periodic generation, one
// frame in flight, drops while busy, delivery before generation within a
// slot. Uses its own RNG stream construction so it shares only the seed
// derivation contract with CameraState.
struct ReplayOracle {
    long gen_interval;
    long phase;
    Rng rng;
    double mean_delay;
    double slot_len;
    std::optional<std::pair<long, long>> in_flight;  // (gen_slot, delivery_slot)
    std::vector<std::pair<long, long>> delivered;    // (gen_slot, delivery_slot)
    long generated = 0, drops = 0;

    ReplayOracle(int cam_id, std::uint64_t master, const FleetConfig& fleet,
                 const ChannelConfig& ch)
        : gen_interval(fleet.gen_interval_slots),
          phase((fleet.gen_phase_offset % fleet.gen_interval_slots) * cam_id %
                fleet.gen_interval_slots),
          rng(derive_seed(master, 0x100 + cam_id)),
          mean_delay(ch.mean_delay_low_ms), slot_len(fleet.slot_len_ms) {}

    void tick(long slot) {
        if (in_flight && in_flight->second == slot) {
            delivered.push_back(*in_flight);
            in_flight.reset();
        }
        if (slot >= phase && (slot - phase) % gen_interval == 0) {
            ++generated;
            if (in_flight) {
                ++drops;
            } else {
                const long d = std::max<long>(
                    1, static_cast<long>(std::ceil(rng.exponential(mean_delay) / slot_len)));
                in_flight = {slot, slot + d};
            }
        }
    }
};

}  // namespace

TEST_CASE("static ring placement") {
    FleetConfig f = default_fleet();
    f.n_cameras = 4;
    f.trajectory.ring_radius = 2.0;
    const Pose p1 = pose_at(f, 1, 0);
    // Camera 1 of 4 sits at angle pi/2.
    REQUIRE(p1.x == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(p1.y == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(p1.theta == Catch::Approx(kTwoPi / 4 + kTwoPi / 2).margin(1e-12));
    // Static poses do not depend on the slot.
    const Pose later = pose_at(f, 1, 5000);
    REQUIRE(later.x == p1.x);
    REQUIRE(later.y == p1.y);
}

TEST_CASE("circular orbit with zero rate equals static; nonzero is periodic") {
    FleetConfig f = default_fleet();
    f.trajectory.kind = TrajectoryKind::CircularOrbit;
    f.trajectory.angular_rate = 0.0;
    FleetConfig s = f;
    s.trajectory.kind = TrajectoryKind::Static;
    for (int cam = 0; cam < f.n_cameras; ++cam) {
        const Pose a = pose_at(f, cam, 123);
        const Pose b = pose_at(s, cam, 123);
        REQUIRE(a.x == Catch::Approx(b.x).margin(1e-12));
        REQUIRE(a.y == Catch::Approx(b.y).margin(1e-12));
    }
    f.trajectory.angular_rate = kTwoPi / 100.0;  // period 100 slots
    const Pose t0 = pose_at(f, 2, 40);
    const Pose t1 = pose_at(f, 2, 140);
    REQUIRE(t0.x == Catch::Approx(t1.x).margin(1e-9));
    REQUIRE(t0.y == Catch::Approx(t1.y).margin(1e-9));
    REQUIRE(t0.phi == 0.0);
}

TEST_CASE("short delays mean every frame is delivered 30 slots apart") {
    FleetConfig fleet = default_fleet();
    ChannelConfig ch;
    ch.mean_delay_low_ms = 1e-9;  // all delays quantize to 1 slot
    ChannelState st;
    CameraState cam(0, 7);
    std::vector<FrameRecord> delivered;
    for (long t = 0; t < 3000; ++t)
        if (auto f = cam.tick(t, fleet, ch, st)) delivered.push_back(*f);
    REQUIRE(cam.dropped() == 0);
    REQUIRE(delivered.size() == cam.delivered());
    REQUIRE(delivered.size() >= 90);
    for (std::size_t i = 1; i < delivered.size(); ++i) {
        REQUIRE(delivered[i].gen_slot - delivered[i - 1].gen_slot == 30);
        REQUIRE(delivered[i].delivery_slot - delivered[i].gen_slot == 1);
        REQUIRE(delivered[i].seq == delivered[i - 1].seq + 1);
    }
}

TEST_CASE("stochastic delivery trace matches an independent replay oracle") {
    FleetConfig fleet = default_fleet();
    fleet.gen_phase_offset = 5;
    ChannelConfig ch;
    ch.mean_delay_low_ms = 60.0;
    ChannelState st;
    for (int cam_id : {0, 1, 3, 5}) {
        CameraState cam(cam_id, 12345);
        ReplayOracle oracle(cam_id, 12345, fleet, ch);
        std::vector<FrameRecord> delivered;
        for (long t = 0; t < 20000; ++t) {
            if (auto f = cam.tick(t, fleet, ch, st)) delivered.push_back(*f);
            oracle.tick(t);
        }
        REQUIRE(delivered.size() == oracle.delivered.size());
        for (std::size_t i = 0; i < delivered.size(); ++i) {
            REQUIRE(delivered[i].gen_slot == oracle.delivered[i].first);
            REQUIRE(delivered[i].delivery_slot == oracle.delivered[i].second);
            REQUIRE(delivered[i].transmission_duration ==
                    delivered[i].delivery_slot - delivered[i].gen_slot);
            REQUIRE(delivered[i].transmission_duration >= 1);
        }
        REQUIRE(cam.generated() == oracle.generated);
        REQUIRE(cam.dropped() == oracle.drops);
    }
}

TEST_CASE("at most one frame in flight and stats are conserved") {
    FleetConfig fleet = default_fleet();
    ChannelConfig ch;
    ch.mean_delay_low_ms = 120.0;  // frequent blocking
    ChannelState st;
    CameraState cam(2, 99);
    long delivered = 0;
    for (long t = 0; t < 30000; ++t)
        if (cam.tick(t, fleet, ch, st)) ++delivered;
    REQUIRE(delivered == cam.delivered());
    const long in_flight = cam.busy() ? 1 : 0;
    REQUIRE(cam.generated() == cam.delivered() + cam.dropped() + in_flight);
    REQUIRE(cam.dropped() > 0);  // mean delay 4x the interval must block sometimes
}

TEST_CASE("drop_rate bounds and preconditions") {
    FleetStats s;
    REQUIRE_THROWS_AS(drop_rate(s), std::invalid_argument);
    s.generated = 10;
    s.dropped = 0;
    REQUIRE(drop_rate(s) == 0.0);
    s.dropped = 5;
    REQUIRE(drop_rate(s) == 0.5);
}

TEST_CASE("fleet validation rejects bad configs") {
    FleetConfig f = default_fleet();
    f.n_cameras = 0;
    REQUIRE_THROWS_AS(f.validate(), std::invalid_argument);
    f = default_fleet();
    f.gen_interval_slots = 0;
    REQUIRE_THROWS_AS(f.validate(), std::invalid_argument);
    f = default_fleet();
    f.slot_len_ms = 0.0;
    REQUIRE_THROWS_AS(f.validate(), std::invalid_argument);
}
