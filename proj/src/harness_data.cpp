#include <filesystem>
#include <fstream>
#include <sstream>

#include "contrail/harness.hpp"
#include "contrail/raster.hpp"

namespace contrail {
namespace {

namespace fs = std::filesystem;

void check_scene_id(const std::string& id) {
    if (id.empty() || id.find_first_of(",/\\\n\r") != std::string::npos || id == "." || id == "..") {
        throw Error("scene id '" + id + "' cannot be used as a dataset file name");
    }
}

}  // namespace

std::vector<Sample> prepare_scenes(const std::vector<SceneRecord>& records, const std::string& bandstack_dir,
                                   int target_size, const ChannelRanges& ranges) {
    if (target_size <= 0) {
        throw Error("prepare_scenes: target_size must be positive");
    }
    std::vector<Sample> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        const std::string path = (fs::path(bandstack_dir) / (rec.scene_id + ".bstk")).string();
        BandStack bands = read_bandstack(path);
        if (bands.height != rec.height || bands.width != rec.width) {
            throw ShapeError("scene " + rec.scene_id + ": band stack is " + std::to_string(bands.height) + "x" +
                             std::to_string(bands.width) + " but the annotation says " + std::to_string(rec.height) +
                             "x" + std::to_string(rec.width));
        }
        // The annotation's day/night flag is authoritative.
        bands.is_night = rec.is_night;
        Sample s;
        s.scene_id = rec.scene_id;
        s.image = resize_image(false_color(bands, ranges), target_size, target_size);
        s.mask = resize_mask(render_ground_truth(rec, rec.height, rec.width), target_size, target_size);
        out.push_back(std::move(s));
    }
    return out;
}

void write_dataset(const std::string& dir, const std::vector<Sample>& samples) {
    const fs::path root(dir);
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    std::ofstream manifest(root / "manifest.csv", std::ios::binary);
    if (!manifest) {
        throw Error("cannot write dataset manifest in " + dir);
    }
    manifest << "scene_id,image,mask\n";
    for (const auto& s : samples) {
        check_scene_id(s.scene_id);
        const std::string image = "images/" + s.scene_id + ".png";
        const std::string mask = "masks/" + s.scene_id + ".png";
        write_rgb_png((root / image).string(), s.image);
        write_mask_png((root / mask).string(), s.mask);
        manifest << s.scene_id << ',' << image << ',' << mask << '\n';
    }
}

std::vector<Sample> read_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream manifest(root / "manifest.csv", std::ios::binary);
    if (!manifest) {
        throw Error("no manifest.csv in dataset directory " + dir);
    }
    std::string line;
    std::getline(manifest, line);
    if (line != "scene_id,image,mask") {
        throw ParseError("dataset manifest: unexpected header '" + line + "'", 0);
    }
    std::vector<Sample> out;
    std::size_t line_no = 1;
    while (std::getline(manifest, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string id;
        std::string image;
        std::string mask;
        if (!std::getline(fields, id, ',') || !std::getline(fields, image, ',') || !std::getline(fields, mask)) {
            throw ParseError("dataset manifest: line " + std::to_string(line_no) + " needs three fields", 0);
        }
        Sample s;
        s.scene_id = id;
        s.image = read_rgb_png((root / image).string());
        s.mask = read_mask_png((root / mask).string());
        require_same_shape(s.image, s.mask, ("dataset scene " + id).c_str());
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace contrail
