#include "contrail/annotations.hpp"

#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "contrail/error.hpp"

namespace contrail {
namespace {

using nlohmann::json;

[[noreturn]] void fail(std::size_t index, const std::string& field, const std::string& message) {
    throw ValidationError("record " + std::to_string(index) + ", field '" + field + "': " + message, index, field);
}

const json& require(const json& object, std::size_t index, const char* key) {
    auto it = object.find(key);
    if (it == object.end()) {
        fail(index, key, "missing");
    }
    return *it;
}

double finite_number(const json& value, std::size_t index, const std::string& field) {
    if (!value.is_number()) {
        fail(index, field, "expected a number");
    }
    const double v = value.get<double>();
    if (!std::isfinite(v)) {
        fail(index, field, "non-finite coordinate");
    }
    return v;
}

int positive_int(const json& value, std::size_t index, const std::string& field) {
    if (!value.is_number_integer()) {
        fail(index, field, "expected an integer");
    }
    const auto v = value.get<long long>();
    if (v <= 0 || v > std::numeric_limits<int>::max()) {
        fail(index, field, "must be a positive integer");
    }
    return static_cast<int>(v);
}

Polygon parse_polygon(const json& value, std::size_t index, std::size_t poly_index) {
    const std::string field = "polygons[" + std::to_string(poly_index) + "]";
    if (!value.is_array()) {
        fail(index, field, "expected an array of [row, col] pairs");
    }
    if (value.size() < 3) {
        fail(index, field, "polygon needs at least 3 vertices, got " + std::to_string(value.size()));
    }
    Polygon poly;
    poly.vertices.reserve(value.size());
    for (std::size_t v = 0; v < value.size(); ++v) {
        const std::string vfield = field + "[" + std::to_string(v) + "]";
        const json& pair = value[v];
        if (!pair.is_array() || pair.size() != 2) {
            fail(index, vfield, "expected a [row, col] pair");
        }
        poly.vertices.push_back({finite_number(pair[0], index, vfield), finite_number(pair[1], index, vfield)});
    }
    return poly;
}

Waypoint parse_waypoint(const json& value, std::size_t index, std::size_t wp_index) {
    const std::string field = "waypoints[" + std::to_string(wp_index) + "]";
    if (!value.is_object()) {
        fail(index, field, "expected an object");
    }
    Waypoint wp;
    wp.row = finite_number(require(value, index, "row"), index, field + ".row");
    wp.col = finite_number(require(value, index, "col"), index, field + ".col");
    const json& flight = require(value, index, "flight");
    if (!flight.is_string()) {
        fail(index, field + ".flight", "expected a string");
    }
    wp.flight_tag = flight.get<std::string>();
    return wp;
}

SceneRecord parse_record(const json& object, std::size_t index) {
    if (!object.is_object()) {
        fail(index, "<record>", "expected an object");
    }
    SceneRecord rec;

    const json& id = require(object, index, "scene_id");
    if (!id.is_string() || id.get_ref<const std::string&>().empty()) {
        fail(index, "scene_id", "expected a nonempty string");
    }
    rec.scene_id = id.get<std::string>();
    rec.width = positive_int(require(object, index, "width"), index, "width");
    rec.height = positive_int(require(object, index, "height"), index, "height");

    const json& night = require(object, index, "is_night");
    if (!night.is_boolean()) {
        fail(index, "is_night", "expected a boolean");
    }
    rec.is_night = night.get<bool>();

    const json& polygons = require(object, index, "polygons");
    if (!polygons.is_array()) {
        fail(index, "polygons", "expected an array");
    }
    for (std::size_t p = 0; p < polygons.size(); ++p) {
        rec.polygons.push_back(parse_polygon(polygons[p], index, p));
    }

    const json& waypoints = require(object, index, "waypoints");
    if (!waypoints.is_array()) {
        fail(index, "waypoints", "expected an array");
    }
    for (std::size_t w = 0; w < waypoints.size(); ++w) {
        rec.waypoints.push_back(parse_waypoint(waypoints[w], index, w));
    }
    return rec;
}

}  // namespace

std::vector<SceneRecord> parse_scene_records(std::string_view document) {
    json root;
    try {
        root = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("annotation JSON: ") + e.what(), e.byte);
    } catch (const json::exception& e) {
        // number overflow (1e999) carries no position
        throw ParseError(std::string("annotation JSON: ") + e.what(), 0);
    }
    if (!root.is_array()) {
        throw ParseError("annotation JSON: top level must be an array", 0);
    }
    std::vector<SceneRecord> records;
    records.reserve(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        records.push_back(parse_record(root[i], i));
    }
    return records;
}

std::string serialize_scene_records(const std::vector<SceneRecord>& records) {
    json root = json::array();
    for (const auto& rec : records) {
        json polygons = json::array();
        for (const auto& poly : rec.polygons) {
            json verts = json::array();
            for (const auto& v : poly.vertices) {
                verts.push_back({v.row, v.col});
            }
            polygons.push_back(std::move(verts));
        }
        json waypoints = json::array();
        for (const auto& wp : rec.waypoints) {
            waypoints.push_back({{"row", wp.row}, {"col", wp.col}, {"flight", wp.flight_tag}});
        }
        root.push_back({{"scene_id", rec.scene_id},
                        {"width", rec.width},
                        {"height", rec.height},
                        {"is_night", rec.is_night},
                        {"polygons", std::move(polygons)},
                        {"waypoints", std::move(waypoints)}});
    }
    return root.dump();
}

std::vector<SceneRecord> load_scene_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open annotation file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scene_records(buffer.str());
}

void save_scene_records(const std::string& path, const std::vector<SceneRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write annotation file: " + path);
    }
    out << serialize_scene_records(records);
}

}  // namespace contrail
