#include "view/view_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

#include "core/bytes.hpp"
#include "core/store_io.hpp"

namespace urbanfield::view {

using nlohmann::json;

void write_depth(const DepthImage& depth, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("OC3Z");
    w.put(kContainerVersion);
    w.put(static_cast<std::uint32_t>(depth.width));
    w.put(static_cast<std::uint32_t>(depth.height));
    w.zeros(8);
    w.put_span(std::span<const float>(depth.depth));
    w.save(path);
}

DepthImage read_depth(const std::filesystem::path& path) {
    auto r = ByteReader::load(path);
    r.expect_magic("OC3Z");
    r.expect_version(kContainerVersion);
    const auto w = r.get<std::uint32_t>();
    const auto h = r.get<std::uint32_t>();
    r.skip(8);
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) r.error("bad depth image size");
    if (static_cast<std::uint64_t>(w) * h * 4 != r.remaining()) r.error("depth payload size mismatch");
    DepthImage d(static_cast<int>(w), static_cast<int>(h));
    r.get_span(std::span<float>(d.depth), "depth");
    return d;
}

namespace {

json to_json(const ViewRecord& r) {
    json j;
    j["id"] = r.id;
    j["pose"] = {{"x", r.pose.position.x},
                 {"y", r.pose.position.y},
                 {"z", r.pose.position.z},
                 {"yaw", r.pose.yaw},
                 {"pitch_down", r.pose.pitch_down}};
    j["intrinsics"] = {{"width", r.intrinsics.width}, {"height", r.intrinsics.height},
                       {"fx", r.intrinsics.fx},       {"fy", r.intrinsics.fy},
                       {"cx", r.intrinsics.cx},       {"cy", r.intrinsics.cy}};
    j["depth"] = r.depth_path;
    if (!r.color_path.empty()) j["color"] = r.color_path;
    return j;
}

ViewRecord from_json(const json& j) {
    ViewRecord r;
    r.id = j.at("id").get<std::int64_t>();
    const auto& p = j.at("pose");
    r.pose.position = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("z").get<double>()};
    r.pose.yaw = p.at("yaw").get<double>();
    r.pose.pitch_down = p.at("pitch_down").get<double>();
    const auto& k = j.at("intrinsics");
    r.intrinsics = {k.at("width").get<int>(), k.at("height").get<int>(), k.at("fx").get<double>(),
                    k.at("fy").get<double>(), k.at("cx").get<double>(), k.at("cy").get<double>()};
    r.depth_path = j.at("depth").get<std::string>();
    if (j.contains("color")) r.color_path = j.at("color").get<std::string>();
    r.pose.validate();
    r.intrinsics.validate();
    return r;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

void write_views_manifest(const std::vector<ViewRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<ViewRecord> read_views_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<ViewRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(from_json(json::parse(line)));
        } catch (const std::exception& e) {
            fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::vector<RenderedView> load_views(const std::filesystem::path& manifest) {
    const auto base = manifest.parent_path();
    std::vector<RenderedView> views;
    for (const auto& r : read_views_manifest(manifest)) {
        RenderedView v;
        v.id = r.id;
        v.pose = r.pose;
        v.intrinsics = r.intrinsics;
        v.depth = read_depth(resolve(base, r.depth_path));
        if (!r.color_path.empty()) v.color = read_image(resolve(base, r.color_path));
        v.validate();
        views.push_back(std::move(v));
    }
    return views;
}

void save_views(const std::vector<RenderedView>& views, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "depth");
    std::vector<ViewRecord> records;
    for (const auto& v : views) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06lld", static_cast<long long>(v.id));
        ViewRecord r{v.id, v.pose, v.intrinsics, std::string("depth/") + name + ".oc3z", {}};
        write_depth(v.depth, dir / r.depth_path);
        if (v.color) {
            std::filesystem::create_directories(dir / "color");
            r.color_path = std::string("color/") + name + ".png";
            write_image(*v.color, dir / r.color_path);
        }
        records.push_back(std::move(r));
    }
    write_views_manifest(records, dir / "views.jsonl");
}

}  // namespace urbanfield::view
