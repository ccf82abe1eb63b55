// Versioned JSON serialization for CliffMap. Doubles are emitted by the
// shortest round-trip rule, so save -> load reproduces every parameter
// bit-exactly. Cells are written in (cx, cy) order to keep output stable.

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cliff/core.hpp"
#include "cliff/map.hpp"

namespace cliff {

inline constexpr int map_format_version = 1;

inline nlohmann::ordered_json map_to_json(const CliffMap& map) {
    nlohmann::ordered_json doc;
    doc["format"] = "cliff-map";
    doc["version"] = map_format_version;
    doc["resolution"] = map.resolution();
    const MapBounds b = map.bounds();
    doc["bounds"] = {{"x_min", b.x_min},
                     {"y_min", b.y_min},
                     {"x_max", b.x_max},
                     {"y_max", b.y_max}};
    auto cells = nlohmann::ordered_json::array();
    for (const CellIndex& idx : map.sorted_indices()) {
        const CliffCell* cell = map.find(idx);
        nlohmann::ordered_json jc;
        jc["cx"] = idx.cx;
        jc["cy"] = idx.cy;
        jc["motion_ratio"] = cell->motion_ratio;
        jc["count"] = cell->observation_count;
        auto comps = nlohmann::ordered_json::array();
        for (const auto& c : cell->mixture.components()) {
            const SymMat2& s = c.swnd.sigma;
            comps.push_back({{"w", c.weight},
                             {"mu", {c.swnd.mu.theta, c.swnd.mu.rho}},
                             {"sigma", {{s.m00, s.m01}, {s.m01, s.m11}}}});
        }
        jc["components"] = std::move(comps);
        cells.push_back(std::move(jc));
    }
    doc["cells"] = std::move(cells);
    return doc;
}

inline void save_map(const CliffMap& map, std::ostream& out) {
    out << map_to_json(map).dump(2) << "\n";
}

inline void save_map(const CliffMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    save_map(map, out);
}

namespace detail {

[[noreturn]] inline void fail_schema(const std::string& source,
                                     const std::string& what) {
    throw std::runtime_error(source + ": bad map schema: " + what);
}

}  // namespace detail

inline CliffMap load_map(std::istream& in, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(source + ": map parse error at byte " +
                                 std::to_string(e.byte) + ": " + e.what());
    }
    try {
        if (!doc.is_object()) detail::fail_schema(source, "root is not an object");
        if (!doc.contains("version")) {
            detail::fail_schema(source, "missing 'version'");
        }
        if (doc["version"] != map_format_version) {
            throw std::runtime_error(
                source + ": unsupported map version " + doc["version"].dump() +
                " (expected " + std::to_string(map_format_version) + ")");
        }
        if (!doc.contains("resolution") || !doc["resolution"].is_number()) {
            detail::fail_schema(source, "missing numeric 'resolution'");
        }
        CliffMap map(doc["resolution"].get<double>());
        if (!doc.contains("cells") || !doc["cells"].is_array()) {
            detail::fail_schema(source, "missing 'cells' array");
        }
        for (const auto& jc : doc["cells"]) {
            const CellIndex idx{jc.at("cx").get<std::int64_t>(),
                                jc.at("cy").get<std::int64_t>()};
            const auto& jcomps = jc.at("components");
            if (!jcomps.is_array() || jcomps.empty()) {
                detail::fail_schema(source, "cell without components");
            }
            std::vector<Swgmm::Component> comps;
            comps.reserve(jcomps.size());
            for (const auto& jcomp : jcomps) {
                const auto& mu = jcomp.at("mu");
                const auto& sg = jcomp.at("sigma");
                if (mu.size() != 2 || sg.size() != 2 || sg[0].size() != 2 ||
                    sg[1].size() != 2) {
                    detail::fail_schema(source, "component shape");
                }
                const double off0 = sg[0][1].get<double>();
                const double off1 = sg[1][0].get<double>();
                if (off0 != off1) {
                    detail::fail_schema(source, "asymmetric covariance");
                }
                comps.push_back(Swgmm::Component{
                    jcomp.at("w").get<double>(),
                    Swnd{Velocity(mu[0].get<double>(), mu[1].get<double>()),
                         SymMat2{sg[0][0].get<double>(), off0,
                                 sg[1][1].get<double>()}}});
            }
            map.insert(idx, Swgmm(std::move(comps)),
                       jc.at("motion_ratio").get<double>(),
                       jc.at("count").get<int>());
        }
        return map;
    } catch (const nlohmann::json::exception& e) {
        detail::fail_schema(source, e.what());
    } catch (const std::invalid_argument& e) {
        detail::fail_schema(source, e.what());
    }
}

inline CliffMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open map file: " + path);
    }
    return load_map(in, path);
}

}  // namespace cliff
