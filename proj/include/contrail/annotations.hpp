#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace contrail {

/// Image-space point; row grows downward, col grows rightward.
struct PixelPoint {
    double row{0.0};
    double col{0.0};

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Closed contrail outline. Needs at least 3 vertices; may extend past the frame.
struct Polygon {
    std::vector<PixelPoint> vertices;

    friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Waypoint {
    double row{0.0};
    double col{0.0};
    std::string flight_tag;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// One labeled scene. An empty polygon list means no contrail was marked.
struct SceneRecord {
    std::string scene_id;
    std::vector<Polygon> polygons;
    std::vector<Waypoint> waypoints;
    bool is_night{false};
    int width{0};
    int height{0};

    friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

[[nodiscard]] inline bool has_contrail(const SceneRecord& record) noexcept { return !record.polygons.empty(); }

// Parses the annotation JSON document (top-level array of scene objects).
// Throws ParseError on malformed JSON and ValidationError on schema violations.
[[nodiscard]] std::vector<SceneRecord> parse_scene_records(std::string_view document);

// Inverse of parse_scene_records.
[[nodiscard]] std::string serialize_scene_records(const std::vector<SceneRecord>& records);

// Convenience wrappers over the two functions above.
[[nodiscard]] std::vector<SceneRecord> load_scene_records(const std::string& path);
void save_scene_records(const std::string& path, const std::vector<SceneRecord>& records);

}  // namespace contrail
