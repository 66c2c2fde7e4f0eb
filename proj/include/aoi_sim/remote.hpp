#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aoi_sim/scene.hpp"

namespace aoisim {

struct RemoteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RemoteTransportError : RemoteError {
    using RemoteError::RemoteError;
};
struct RemoteProtocolError : RemoteError {
    using RemoteError::RemoteError;
};
struct RemoteDimensionError : RemoteError {
    using RemoteError::RemoteError;
};

struct RemoteBackendConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string path = "/reconstruct";
    int timeout_s = 10;
};

namespace detail {

inline const char* b64_alphabet() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
    const char* tab = b64_alphabet();
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < data.size(); i += 3) {
        const unsigned v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out.push_back(tab[(v >> 6) & 63]);
        out.push_back(tab[v & 63]);
    }
    if (i + 1 == data.size()) {
        const unsigned v = data[i] << 16;
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == data.size()) {
        const unsigned v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out.push_back(tab[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
    int rev[256];
    for (auto& r : rev) r = -1;
    const char* tab = b64_alphabet();
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(tab[i])] = i;
    std::vector<std::uint8_t> out;
    unsigned buffer = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = rev[static_cast<unsigned char>(c)];
        if (v < 0) throw RemoteProtocolError("base64: invalid character");
        buffer = (buffer << 6) | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xff));
        }
    }
    return out;
}

inline std::vector<std::uint8_t> image_bytes(const Image& img) {
    if (img.depth_bits() > 8)
        throw RemoteProtocolError("remote: only 8-bit payloads supported");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(img.size());
    for (auto p : img.pixels()) bytes.push_back(static_cast<std::uint8_t>(p & 0xff));
    return bytes;
}

inline nlohmann::json pose_json(const Pose& p) {
    return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"theta", p.theta}, {"phi", p.phi}};
}

}  // namespace detail

inline nlohmann::json make_reconstruct_request(const SceneConfig& cfg,
                                               const std::vector<Observation>& selected,
                                               double t_ms) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& obs : selected) {
        frames.push_back({{"camera_id", obs.camera_id},
                          {"gen_time_ms", obs.gen_time_ms},
                          {"pose", detail::pose_json(obs.pose)},
                          {"image_base64", detail::base64_encode(detail::image_bytes(obs.image))},
                          {"width", obs.image.width()},
                          {"height", obs.image.height()}});
    }
    return {{"t_ms", t_ms},
            {"novel_view_pose", detail::pose_json(cfg.novel_view_pose)},
            {"frames", frames}};
}

inline Image parse_reconstruct_response(const SceneConfig& cfg, const std::string& body) {
    nlohmann::json resp;
    try {
        resp = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw RemoteProtocolError(std::string("remote: malformed response: ") + e.what());
    }
    if (!resp.contains("image_base64") || !resp.contains("width") || !resp.contains("height"))
        throw RemoteProtocolError("remote: response missing required fields");
    const int w = resp["width"].get<int>();
    const int h = resp["height"].get<int>();
    const int depth = resp.value("depth", 8);
    if (w != cfg.width || h != cfg.height || depth != cfg.depth_bits)
        throw RemoteDimensionError("remote: response dimensions do not match scene config");
    const auto bytes = detail::base64_decode(resp["image_base64"].get<std::string>());
    if (bytes.size() != static_cast<std::size_t>(w) * h)
        throw RemoteDimensionError("remote: payload size does not match dimensions");
    Image img(w, h, depth);
    for (int row = 0; row < h; ++row)
        for (int col = 0; col < w; ++col)
            img.set(row, col, bytes[static_cast<std::size_t>(row) * w + col]);
    return img;
}

/// POSTs the selected frames to an external reconstruction backend and
/// decodes the returned image. Transport, protocol, and dimension problems
/// raise distinct error types; no silent fallback here.
inline Image remote_reconstruct(const RemoteBackendConfig& backend, const SceneConfig& cfg,
                                const std::vector<Observation>& selected, double t_ms) {
    httplib::Client client(backend.host, backend.port);
    client.set_connection_timeout(backend.timeout_s);
    client.set_read_timeout(backend.timeout_s);
    const auto request = make_reconstruct_request(cfg, selected, t_ms);
    auto res = client.Post(backend.path, request.dump(), "application/json");
    if (!res)
        throw RemoteTransportError("remote: backend unreachable at " + backend.host + ":" +
                                   std::to_string(backend.port));
    if (res->status != 200)
        throw RemoteProtocolError("remote: backend returned HTTP " +
                                  std::to_string(res->status));
    return parse_reconstruct_response(cfg, res->body);
}

/// LPIPS plugin backed by an external process, same JSON/base64 convention:
/// request {a_base64, b_base64, width, height}, response {value}.
inline double remote_lpips(const RemoteBackendConfig& backend, const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw RemoteProtocolError("remote_lpips: image shape mismatch");
    httplib::Client client(backend.host, backend.port);
    client.set_connection_timeout(backend.timeout_s);
    client.set_read_timeout(backend.timeout_s);
    const nlohmann::json request = {{"a_base64", detail::base64_encode(detail::image_bytes(a))},
                                    {"b_base64", detail::base64_encode(detail::image_bytes(b))},
                                    {"width", a.width()},
                                    {"height", a.height()}};
    auto res = client.Post(backend.path, request.dump(), "application/json");
    if (!res) throw RemoteTransportError("remote_lpips: backend unreachable");
    if (res->status != 200)
        throw RemoteProtocolError("remote_lpips: backend returned HTTP " +
                                  std::to_string(res->status));
    try {
        const auto body = nlohmann::json::parse(res->body);
        const double value = body.at("value").get<double>();
        if (value < 0.0) throw RemoteProtocolError("remote_lpips: negative value");
        return value;
    } catch (const nlohmann::json::exception& e) {
        throw RemoteProtocolError(std::string("remote_lpips: malformed response: ") + e.what());
    }
}

}  // namespace aoisim
