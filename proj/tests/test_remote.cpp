#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include <httplib.h>

#include "aoi_sim/remote.hpp"

using namespace aoisim;

namespace {

SceneConfig tiny_scene() {
    SceneConfig cfg;
    cfg.width = 8;
    cfg.height = 6;
    cfg.background = 32.0;
    return cfg;
}

Observation tiny_observation(const SceneConfig& cfg) {
    Observation obs = observe(cfg, /*n_cameras=*/2, /*cam_id=*/0, /*t_ms=*/0.0, Pose{});
    obs.camera_id = 0;
    obs.gen_time_ms = 12.0;
    return obs;
}

/// In-process backend for exercising the client end to end.
class LocalServer {
public:
    explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/reconstruct", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("base64 round-trips arbitrary bytes") {
    using detail::base64_decode;
    using detail::base64_encode;
    REQUIRE(base64_encode({}) == "");
    REQUIRE(base64_encode({'M', 'a', 'n'}) == "TWFu");   // classic vectors
    REQUIRE(base64_encode({'M', 'a'}) == "TWE=");
    REQUIRE(base64_encode({'M'}) == "TQ==");
    Rng rng(9);
    for (int len = 0; len < 40; ++len) {
        std::vector<std::uint8_t> data(len);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng.uniform01() * 256.0);
        REQUIRE(base64_decode(base64_encode(data)) == data);
    }
    REQUIRE_THROWS_AS(base64_decode("TW!u"), RemoteProtocolError);
}

TEST_CASE("reconstruct request carries the frame payload") {
    const SceneConfig cfg = tiny_scene();
    const auto obs = tiny_observation(cfg);
    const auto req = make_reconstruct_request(cfg, {obs}, 345.0);
    REQUIRE(req.at("t_ms") == 345.0);
    REQUIRE(req.at("frames").size() == 1);
    const auto& frame = req.at("frames")[0];
    REQUIRE(frame.at("camera_id") == 0);
    REQUIRE(frame.at("gen_time_ms") == 12.0);
    REQUIRE(frame.at("width") == cfg.width);
    REQUIRE(frame.at("height") == cfg.height);
    const auto bytes = detail::base64_decode(frame.at("image_base64").get<std::string>());
    REQUIRE(bytes.size() == static_cast<std::size_t>(cfg.width) * cfg.height);
    REQUIRE(static_cast<int>(bytes[0]) == obs.image.at(0, 0));
}

TEST_CASE("response parsing validates dimensions and shape") {
    const SceneConfig cfg = tiny_scene();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(cfg.width) * cfg.height, 7);
    const nlohmann::json good = {{"image_base64", detail::base64_encode(bytes)},
                                 {"width", cfg.width},
                                 {"height", cfg.height}};
    const Image img = parse_reconstruct_response(cfg, good.dump());
    REQUIRE(img.width() == cfg.width);
    REQUIRE(img.at(3, 5) == 7);

    nlohmann::json wrong = good;
    wrong["width"] = cfg.width + 1;
    REQUIRE_THROWS_AS(parse_reconstruct_response(cfg, wrong.dump()), RemoteDimensionError);

    nlohmann::json short_payload = good;
    short_payload["image_base64"] = detail::base64_encode({1, 2, 3});
    REQUIRE_THROWS_AS(parse_reconstruct_response(cfg, short_payload.dump()),
                      RemoteDimensionError);

    REQUIRE_THROWS_AS(parse_reconstruct_response(cfg, "{not json"), RemoteProtocolError);
    REQUIRE_THROWS_AS(parse_reconstruct_response(cfg, R"({"width": 8})"), RemoteProtocolError);
}

TEST_CASE("remote reconstruction round-trips through a live backend") {
    const SceneConfig cfg = tiny_scene();
    const auto obs = tiny_observation(cfg);
    // Echo backend: returns the first frame's pixels as the reconstruction.
    LocalServer server([&cfg](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const nlohmann::json out = {{"image_base64", body.at("frames")[0].at("image_base64")},
                                    {"width", cfg.width},
                                    {"height", cfg.height}};
        res.set_content(out.dump(), "application/json");
    });
    RemoteBackendConfig backend;
    backend.port = server.port();
    const Image img = remote_reconstruct(backend, cfg, {obs}, 0.0);
    REQUIRE(img == obs.image);
}

TEST_CASE("transport and protocol failures raise distinct errors") {
    const SceneConfig cfg = tiny_scene();
    RemoteBackendConfig backend;
    backend.port = 1;  // nothing listens here
    backend.timeout_s = 1;
    REQUIRE_THROWS_AS(remote_reconstruct(backend, cfg, {}, 0.0), RemoteTransportError);

    LocalServer bad_status([](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
    });
    backend.port = bad_status.port();
    REQUIRE_THROWS_AS(remote_reconstruct(backend, cfg, {}, 0.0), RemoteProtocolError);
}

TEST_CASE("remote lpips plugin returns the backend value") {
    LocalServer server([](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        REQUIRE(body.contains("a_base64"));
        REQUIRE(body.contains("b_base64"));
        res.set_content(nlohmann::json{{"value", 0.342}}.dump(), "application/json");
    });
    RemoteBackendConfig backend;
    backend.port = server.port();
    backend.path = "/reconstruct";
    const Image a(4, 4, 8, 10), b(4, 4, 8, 200);
    REQUIRE(remote_lpips(backend, a, b) == 0.342);

    const Image mismatched(5, 4, 8, 0);
    REQUIRE_THROWS_AS(remote_lpips(backend, a, mismatched), RemoteProtocolError);

    LocalServer malformed([](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"wrong\": 1}", "application/json");
    });
    backend.port = malformed.port();
    REQUIRE_THROWS_AS(remote_lpips(backend, a, b), RemoteProtocolError);
}
