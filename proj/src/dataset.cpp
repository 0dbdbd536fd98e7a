#include "forge/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "forge/codec.hpp"
#include "forge/conditioning.hpp"
#include "forge/depth_fusion.hpp"
#include "forge/detail_mask.hpp"
#include "forge/rng.hpp"

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
    const Bytes raw = read_file(path);
    try {
        return json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

CocoSource load_coco(const fs::path& annotations, const fs::path& depth_dir) {
    const json doc = read_json(annotations);
    CocoSource src;
    src.root = annotations.parent_path();
    src.depth_dir = depth_dir;
    try {
        std::map<int, std::string> categories;
        for (const auto& c : doc.at("categories")) categories[c.at("id").get<int>()] = c.at("name").get<std::string>();

        std::vector<json> images(doc.at("images").begin(), doc.at("images").end());
        std::sort(images.begin(), images.end(),
                  [](const json& a, const json& b) { return a.at("id").get<int>() < b.at("id").get<int>(); });
        std::vector<json> anns(doc.at("annotations").begin(), doc.at("annotations").end());
        std::sort(anns.begin(), anns.end(),
                  [](const json& a, const json& b) { return a.at("id").get<int>() < b.at("id").get<int>(); });

        for (const json& im : images) {
            const int image_id = im.at("id").get<int>();
            const double w = im.at("width").get<double>();
            const double h = im.at("height").get<double>();
            SceneAnnotation scene;
            scene.image_ref = im.at("file_name").get<std::string>();
            scene.depth_ref = fs::path(scene.image_ref).stem().string() + ".pfm";
            for (const json& a : anns) {
                if (a.at("image_id").get<int>() != image_id) continue;
                const auto box = a.at("bbox").get<std::vector<double>>();
                if (box.size() != 4) fail(ErrorCode::SchemaViolation, "annotation bbox must be [x, y, w, h]");
                const auto cat = categories.find(a.at("category_id").get<int>());
                if (cat == categories.end()) fail(ErrorCode::SchemaViolation, "annotation with unknown category");
                Instance inst;
                inst.id = a.at("id").get<int>();
                inst.name = cat->second;
                inst.bbox = BBox::make(std::clamp(box[0] / w, 0.0, 1.0), std::clamp(box[1] / h, 0.0, 1.0),
                                       std::clamp((box[0] + box[2]) / w, 0.0, 1.0),
                                       std::clamp((box[1] + box[3]) / h, 0.0, 1.0));
                inst.seg_ref = a.value("mask_file", std::string());
                scene.instances.push_back(std::move(inst));
            }
            src.scenes.push_back(std::move(scene));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaViolation, annotations.string() + ": " + e.what());
    }
    return src;
}

SceneData load_scene(const CocoSource& source, std::size_t index) {
    if (index >= source.scenes.size()) fail(ErrorCode::OutOfRange, "scene index out of range");
    SceneData s;
    s.annotation = source.scenes[index];
    s.image = read_png(source.root / s.annotation.image_ref);
    s.depth = read_pfm(source.depth_dir / s.annotation.depth_ref).map;
    if (s.depth.width() != s.image.width() || s.depth.height() != s.image.height()) {
        fail(ErrorCode::DimensionMismatch, s.annotation.depth_ref + " does not match its image");
    }
    for (const Instance& inst : s.annotation.instances) {
        Mask m = inst.seg_ref.empty()
                     ? Mask::from_rect(s.image.width(), s.image.height(),
                                       inst.bbox.to_pixels(s.image.width(), s.image.height()), MaskKind::segmentation)
                     : read_mask_png(source.root / inst.seg_ref);
        if (m.width() != s.image.width() || m.height() != s.image.height()) {
            fail(ErrorCode::DimensionMismatch, "mask of instance " + std::to_string(inst.id) + " does not match its image");
        }
        s.segs.emplace(inst.id, std::move(m));
    }
    return s;
}

// ---- records ----------------------------------------------------------------------

json record_to_json(const DatasetRecord& r) {
    json anchors = json::array();
    for (const Instance& a : r.anchors) anchors.push_back(json{{"id", a.id}, {"name", a.name}, {"bbox", a.bbox}});
    return json{{"counterfactual_image", r.counterfactual_image},
                {"instruction", r.instruction},
                {"answer", r.answer},
                {"relations", r.relations},
                {"source_image", r.source_image},
                {"target_instance", r.target_instance},
                {"target_name", r.target_name},
                {"anchors", anchors},
                {"depth_ref", r.depth_ref},
                {"k", r.k}};
}

DatasetRecord record_from_json(const json& j) {
    DatasetRecord r;
    try {
        if (!j.is_object()) fail(ErrorCode::SchemaViolation, "record must be an object");
        r.counterfactual_image = j.at("counterfactual_image").get<std::string>();
        r.instruction = j.at("instruction").get<std::string>();
        const Location25D answer = j.at("answer").get<Location25D>();
        r.answer = Location25D::make(answer.bbox, answer.depth);
        r.relations = j.at("relations").get<std::vector<Relation>>();
        r.source_image = j.at("source_image").get<std::string>();
        r.target_instance = j.at("target_instance").get<int>();
        r.target_name = j.at("target_name").get<std::string>();
        for (const auto& a : j.at("anchors")) {
            Instance inst;
            inst.id = a.at("id").get<int>();
            inst.name = a.at("name").get<std::string>();
            const BBox b = a.at("bbox").get<BBox>();
            inst.bbox = BBox::make(b.x1, b.y1, b.x2, b.y2);
            r.anchors.push_back(std::move(inst));
        }
        r.depth_ref = j.value("depth_ref", std::string());
        r.k = j.at("k").get<int>();
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaViolation, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaViolation) throw;
        fail(ErrorCode::SchemaViolation, e.what());
    }

    auto require = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorCode::SchemaViolation, what);
    };
    require(r.k >= 2 && r.k <= 4, "k must lie in [2,4]");
    require(r.relations.size() == static_cast<std::size_t>(r.k - 1), "expected k-1 relations");
    require(r.anchors.size() == r.relations.size(), "expected one anchor per relation");
    require(r.instruction.find(r.target_name) != std::string::npos, "instruction does not mention the target");
    for (std::size_t i = 0; i < r.relations.size(); ++i) {
        const Relation& rel = r.relations[i];
        require(rel.subject == r.target_instance, "relation subject must be the target");
        const auto a = std::find_if(r.anchors.begin(), r.anchors.end(),
                                    [&](const Instance& inst) { return inst.id == rel.anchor; });
        require(a != r.anchors.end(), "relation anchor missing from anchors");
        require(r.instruction.find(a->name) != std::string::npos, "instruction does not mention '" + a->name + "'");
    }
    return r;
}

std::vector<DatasetRecord> read_records(const fs::path& jsonl) {
    const Bytes raw = read_file(jsonl);
    std::vector<DatasetRecord> out;
    std::size_t start = 0, line = 0;
    const std::string text(raw.begin(), raw.end());
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line;
        const std::string row = text.substr(start, end - start);
        start = end + 1;
        if (row.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(row);
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaViolation, jsonl.string() + ":" + std::to_string(line) + ": " + e.what());
        }
        out.push_back(record_from_json(j));
    }
    return out;
}

namespace {

std::vector<const Instance*> anchor_candidates(const SceneAnnotation& scene, const Instance& target) {
    std::map<std::string, int> counts;
    for (const Instance& inst : scene.instances) ++counts[lower(inst.name)];
    std::vector<const Instance*> out;
    for (const Instance& inst : scene.instances) {
        if (inst.id == target.id) continue;
        const std::string key = lower(inst.name);
        if (counts[key] != 1 || key == lower(target.name)) continue;
        out.push_back(&inst);
    }
    return out;
}

}  // namespace

BuiltRecord build_record(const SceneData& scene, int target_id, int k, std::uint64_t seed, InpaintClient& inpaint,
                         const RecordOptions& options) {
    if (k < 2 || k > 4) fail(ErrorCode::InvalidArgument, "k must lie in [2,4]");
    if (scene.annotation.instances.size() < static_cast<std::size_t>(k)) {
        fail(ErrorCode::TooFewInstances, "scene has fewer than k instances");
    }
    const Instance* target = scene.annotation.find_by_id(target_id);
    if (target == nullptr) fail(ErrorCode::InstanceMissing, "no instance " + std::to_string(target_id));
    std::vector<const Instance*> candidates = anchor_candidates(scene.annotation, *target);
    if (candidates.size() < static_cast<std::size_t>(k - 1)) {
        fail(ErrorCode::TooFewInstances, "not enough uniquely named anchors for k=" + std::to_string(k));
    }

    Rng rng(seed);
    rng.shuffle(candidates);
    std::vector<Instance> anchors;
    std::map<int, std::string> names;
    for (int i = 0; i < k - 1; ++i) {
        Instance a = *candidates[i];
        a.seg_ref.clear();
        names[a.id] = a.name;
        anchors.push_back(std::move(a));
    }

    BuiltRecord out;
    DatasetRecord& r = out.record;
    r.relations = derive_relations(*target, anchors, scene.depth, options.thresholds);
    r.instruction = render_instruction(target->name, r.relations, names, rng.next(), options.templates);
    r.answer = Location25D{target->bbox, anchor_depth(scene.depth, target->bbox)};
    r.source_image = scene.annotation.image_ref;
    r.target_instance = target->id;
    r.target_name = target->name;
    r.anchors = std::move(anchors);
    r.k = k;

    const auto seg = scene.segs.find(target->id);
    if (seg == scene.segs.end()) fail(ErrorCode::InstanceMissing, "no mask for instance " + std::to_string(target->id));
    const Mask removal = augment_mask(seg->second, MaskLevel(2), options.inpaint_dilate_fraction);
    try {
        out.counterfactual = inpaint.remove(scene.image, removal);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BackendUnavailable || e.code() == ErrorCode::Timeout) throw;
        fail(ErrorCode::InpaintFailure, e.message());
    }
    if (out.counterfactual.width() != scene.image.width() || out.counterfactual.height() != scene.image.height()) {
        fail(ErrorCode::InpaintFailure, "inpainter changed the image size");
    }
    return out;
}

DatasetSummary build_dataset(const CocoSource& source, const DatasetOptions& options, InpaintClient& inpaint,
                             const fs::path& out_dir) {
    if (source.scenes.empty()) fail(ErrorCode::InvalidArgument, "annotation file lists no images");
    if (options.n == 0) fail(ErrorCode::InvalidArgument, "n must be positive");
    if (options.k_min < 2 || options.k_max > 4 || options.k_min > options.k_max) {
        fail(ErrorCode::InvalidArgument, "k range must lie within [2,4]");
    }

    std::vector<SceneData> scenes;
    const std::size_t used = std::min(options.n, source.scenes.size());
    for (std::size_t i = 0; i < used; ++i) scenes.push_back(load_scene(source, i));

    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "depth");

    std::vector<std::string> depth_refs(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const Bytes pfm = encode_pfm(scenes[i].depth.raster());
        depth_refs[i] = "depth/" + sha256_hex(pfm) + ".pfm";
        write_file(out_dir / depth_refs[i], pfm);
    }

    std::vector<DatasetRecord> records(options.n);
    std::vector<std::exception_ptr> errors(options.n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < options.n; i = next++) {
            try {
                Rng rng = Rng::stream(options.seed, i);
                const std::size_t si = i % scenes.size();
                const SceneData& scene = scenes[si];
                int k = options.k_min + static_cast<int>(rng.below(options.k_max - options.k_min + 1));
                std::vector<const Instance*> eligible;
                for (; k >= 2; --k) {
                    for (const Instance& inst : scene.annotation.instances) {
                        if (anchor_candidates(scene.annotation, inst).size() >= static_cast<std::size_t>(k - 1)) {
                            eligible.push_back(&inst);
                        }
                    }
                    if (!eligible.empty()) break;
                }
                if (eligible.empty()) {
                    fail(ErrorCode::TooFewInstances, scene.annotation.image_ref + " has no usable target");
                }
                const Instance* target = eligible[rng.below(eligible.size())];
                BuiltRecord built = build_record(scene, target->id, k, rng.next(), inpaint, options.record);
                const Bytes png = encode_png(built.counterfactual);
                built.record.counterfactual_image = "images/" + sha256_hex(png) + ".png";
                built.record.depth_ref = depth_refs[si];
                write_file(out_dir / built.record.counterfactual_image, png);
                records[i] = std::move(built.record);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1u, options.jobs);
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::string jsonl;
    std::set<std::string> files{"records.jsonl"};
    for (const DatasetRecord& r : records) {
        jsonl += record_to_json(r).dump() + "\n";
        files.insert(r.counterfactual_image);
        files.insert(r.depth_ref);
    }
    write_text(out_dir / "records.jsonl", jsonl);
    return DatasetSummary{records.size(), std::vector<std::string>(files.begin(), files.end())};
}

// ---- video pairs ---------------------------------------------------------------------

VideoPair sample_video_pair(const std::vector<VideoFrame>& frames, std::uint64_t seed, double dilate_fraction) {
    if (frames.size() < 2) fail(ErrorCode::InstanceMissing, "a training pair needs at least two frames");
    for (const VideoFrame& f : frames) {
        if (f.image.width() != f.mask.width() || f.image.height() != f.mask.height()) {
            fail(ErrorCode::DimensionMismatch, "frame and mask differ in size");
        }
        if (f.mask.count() == 0) fail(ErrorCode::InstanceMissing, "instance absent from a frame");
    }
    Rng rng(seed);
    const std::size_t n = frames.size();
    std::size_t pair = rng.below(n * (n - 1) / 2);
    std::size_t a = 0;
    while (pair >= n - 1 - a) {
        pair -= n - 1 - a;
        ++a;
    }
    const std::size_t b = a + 1 + pair;

    VideoPair out;
    out.frame_a = a;
    out.frame_b = b;
    out.level = 2 + static_cast<int>(rng.below(4));
    out.reference_crop = isolate_object(frames[a].image, frames[a].mask);
    out.scene_mask = augment_mask(frames[b].mask, MaskLevel(out.level), dilate_fraction);
    out.scene_image = mask_scene(frames[b].image, out.scene_mask);
    out.ground_truth = frames[b].image;
    return out;
}

// ---- fixtures --------------------------------------------------------------------------

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

void paint(Image& img, std::uint32_t x, std::uint32_t y, Rgb c) {
    img.at(x, y, 0) = c.r;
    img.at(x, y, 1) = c.g;
    img.at(x, y, 2) = c.b;
}

/// Ellipse (or rectangle) symmetric about the pixel-edge center (cx, cy) with
/// half extents hw, hh, so its bounds are exactly [cx-hw, cx+hw) x [cy-hh, cy+hh).
Mask shape_mask(std::uint32_t w, std::uint32_t h, int cx, int cy, int hw, int hh, bool ellipse) {
    Mask m(w, h, MaskKind::segmentation);
    for (int y = cy - hh; y < cy + hh; ++y) {
        for (int x = cx - hw; x < cx + hw; ++x) {
            if (ellipse) {
                const double u = (x + 0.5 - cx) / hw;
                const double v = (y + 0.5 - cy) / hh;
                if (u * u + v * v > 1.0) continue;
            }
            m.set(x, y, true);
        }
    }
    if (ellipse) {
        // The extreme rows and columns always carry their middle pixels.
        for (int x = cx - hw; x < cx + hw; ++x) {
            if (std::abs(x + 0.5 - cx) <= 1.0) {
                m.set(x, cy - hh, true);
                m.set(x, cy + hh - 1, true);
            }
        }
        for (int y = cy - hh; y < cy + hh; ++y) {
            if (std::abs(y + 0.5 - cy) <= 1.0) {
                m.set(cx - hw, y, true);
                m.set(cx + hw - 1, y, true);
            }
        }
    }
    return m;
}

void draw_background(Image& img, FloatMap& depth, Rgb sky, Rgb ground, double horizon) {
    const std::uint32_t w = img.width(), h = img.height();
    for (std::uint32_t y = 0; y < h; ++y) {
        const double t = static_cast<double>(y) / (h - 1);
        for (std::uint32_t x = 0; x < w; ++x) {
            const bool below = t >= horizon;
            const Rgb base = below ? ground : sky;
            const int shade = static_cast<int>(24.0 * t) + static_cast<int>((x / 16 + y / 16) % 2) * 6;
            paint(img, x, y,
                  Rgb{static_cast<std::uint8_t>(std::clamp(base.r + shade, 0, 255)),
                      static_cast<std::uint8_t>(std::clamp(base.g + shade, 0, 255)),
                      static_cast<std::uint8_t>(std::clamp(base.b + shade, 0, 255))});
            depth.at(x, y) = static_cast<float>(0.05 + 0.45 * t);
        }
    }
}

constexpr const char* kCategories[] = {"person", "bicycle", "car",  "dog",  "cat",   "chair",
                                       "bench",  "bottle",  "cup",  "sofa", "bird",  "umbrella"};

}  // namespace

void write_coco_fixture(const fs::path& dir, std::size_t n_images, std::uint64_t seed) {
    constexpr std::uint32_t W = 256, H = 256;
    constexpr int kGrid = 32;  // centers sit on the mock locator's grid
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    fs::create_directories(dir / "depth");

    json images = json::array(), annotations = json::array(), categories = json::array();
    for (std::size_t c = 0; c < std::size(kCategories); ++c) {
        categories.push_back(json{{"id", c + 1}, {"name", kCategories[c]}});
    }

    int ann_id = 1;
    for (std::size_t i = 0; i < n_images; ++i) {
        Rng rng = Rng::stream(seed, i);
        Image img(W, H, 3);
        FloatMap depth(W, H, 1);
        draw_background(img, depth, Rgb{120, 160, 210}, Rgb{90, 90, 80}, 0.35 + 0.2 * rng.uniform());

        std::vector<int> cats(std::size(kCategories));
        for (std::size_t c = 0; c < cats.size(); ++c) cats[c] = static_cast<int>(c);
        rng.shuffle(cats);
        const int m = 4 + static_cast<int>(rng.below(3));

        struct Obj {
            int id, cat;
            Mask mask;
            float depth;
            Rgb color;
            int stripe;
        };
        std::vector<Obj> objs;
        for (int k = 0; k < m; ++k) {
            const int hw = 10 + static_cast<int>(rng.below(20));
            const int hh = 10 + static_cast<int>(rng.below(24));
            // Center index range keeps the box in frame and inside the locator's smallest box.
            const int lo_x = std::max(1, (hw + 3) / 8), lo_y = std::max(1, (hh + 3) / 8);
            const int ix = lo_x + static_cast<int>(rng.below(kGrid - 2 * lo_x));
            const int iy = lo_y + static_cast<int>(rng.below(kGrid - 2 * lo_y));
            const int cx = 8 * ix + 4, cy = 8 * iy + 4;
            const bool ellipse = rng.below(2) == 0;
            const float d = static_cast<float>((3 + rng.below(13)) + 0.5) / 16.0f;
            const Rgb color{static_cast<std::uint8_t>(30 + rng.below(200)), static_cast<std::uint8_t>(30 + rng.below(200)),
                            static_cast<std::uint8_t>(30 + rng.below(200))};
            objs.push_back(Obj{ann_id++, cats[k], shape_mask(W, H, cx, cy, hw, hh, ellipse), d, color,
                               2 + static_cast<int>(rng.below(4))});
        }

        // Far objects first so nearer ones cover them in both image and depth.
        std::vector<std::size_t> order(objs.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return objs[a].depth < objs[b].depth; });
        for (std::size_t k : order) {
            const Obj& o = objs[k];
            for (std::uint32_t y = 0; y < H; ++y) {
                for (std::uint32_t x = 0; x < W; ++x) {
                    if (!o.mask.on(x, y)) continue;
                    const bool band = (y / o.stripe) % 2 == 0;
                    paint(img, x, y,
                          band ? o.color
                               : Rgb{static_cast<std::uint8_t>(o.color.r / 2), static_cast<std::uint8_t>(o.color.g / 2),
                                     static_cast<std::uint8_t>(o.color.b / 2)});
                    depth.at(x, y) = o.depth;
                }
            }
        }

        char stem[32];
        std::snprintf(stem, sizeof stem, "scene_%03zu", i);
        write_png(img, dir / "images" / (std::string(stem) + ".png"));
        write_pfm(DepthMap(std::move(depth)), dir / "depth" / (std::string(stem) + ".pfm"));
        images.push_back(json{{"id", i + 1}, {"file_name", "images/" + std::string(stem) + ".png"}, {"width", W}, {"height", H}});
        for (const Obj& o : objs) {
            const PixelRect b = *o.mask.bounds();
            const std::string mask_file = "masks/" + std::string(stem) + "_" + std::to_string(o.id) + ".png";
            write_mask_png(o.mask, dir / mask_file);
            annotations.push_back(json{{"id", o.id},
                                       {"image_id", i + 1},
                                       {"category_id", o.cat + 1},
                                       {"bbox", {b.x0, b.y0, b.width(), b.height()}},
                                       {"mask_file", mask_file}});
        }
    }
    write_text(dir / "annotations.json",
               json{{"images", images}, {"annotations", annotations}, {"categories", categories}}.dump(1) + "\n");
}

void write_compose_fixture(const fs::path& dir) {
    fs::create_directories(dir / "clip");
    constexpr std::uint32_t W = 320, H = 240;
    Image street(W, H, 3);
    FloatMap depth(W, H, 1);
    draw_background(street, depth, Rgb{140, 180, 220}, Rgb{70, 70, 75}, 0.45);

    // Parked car on the right and a tree on the left.
    const Mask car = shape_mask(W, H, 256, 170, 40, 22, false);
    const Mask tree = shape_mask(W, H, 48, 110, 22, 60, true);
    for (std::uint32_t y = 0; y < H; ++y) {
        for (std::uint32_t x = 0; x < W; ++x) {
            if (car.on(x, y)) {
                paint(street, x, y, (y / 4) % 2 ? Rgb{180, 30, 30} : Rgb{140, 20, 20});
                depth.at(x, y) = 0.55f;
            } else if (tree.on(x, y)) {
                paint(street, x, y, (x / 3) % 2 ? Rgb{40, 120, 40} : Rgb{30, 90, 30});
                depth.at(x, y) = 0.35f;
            }
        }
    }
    // Lamp pole close to the camera, crossing the middle of the frame.
    for (std::uint32_t y = 0; y < H; ++y) {
        for (std::uint32_t x = 150; x < 166; ++x) {
            paint(street, x, y, Rgb{30, 30, 35});
            depth.at(x, y) = 0.9f;
        }
    }
    write_png(street, dir / "street.png");
    write_pfm(DepthMap(std::move(depth)), dir / "street_depth.pfm");

    SceneAnnotation ann;
    ann.image_ref = "street.png";
    ann.depth_ref = "street_depth.pfm";
    ann.instances = {Instance{1, "car", BBox::from_pixels(*car.bounds(), W, H), ""},
                     Instance{2, "tree", BBox::from_pixels(*tree.bounds(), W, H), ""},
                     Instance{3, "pole", BBox::from_pixels(PixelRect{150, 0, 166, static_cast<int>(H)}, W, H), ""}};
    write_text(dir / "street_annotations.json", json(ann).dump(2) + "\n");

    // Dog: RGBA reference with a furry texture.
    constexpr std::uint32_t D = 96;
    Image dog(D, D, 4, 0);
    const Mask body = shape_mask(D, D, 48, 56, 38, 28, true);
    const Mask head = shape_mask(D, D, 70, 28, 18, 18, true);
    for (std::uint32_t y = 0; y < D; ++y) {
        for (std::uint32_t x = 0; x < D; ++x) {
            if (!body.on(x, y) && !head.on(x, y)) continue;
            const int fur = static_cast<int>((x * 7 + y * 13) % 23);
            dog.at(x, y, 0) = static_cast<std::uint8_t>(150 + fur);
            dog.at(x, y, 1) = static_cast<std::uint8_t>(100 + fur);
            dog.at(x, y, 2) = static_cast<std::uint8_t>(50 + fur / 2);
            dog.at(x, y, 3) = 255;
        }
    }
    write_png(dog, dir / "dog.png");

    // Two-frame clip of a ball rolling across a floor.
    for (int f = 0; f < 2; ++f) {
        Image frame(160, 120, 3);
        FloatMap unused(160, 120, 1);
        draw_background(frame, unused, Rgb{200, 200, 190}, Rgb{110, 80, 60}, 0.5);
        const Mask ball = shape_mask(160, 120, 50 + 50 * f, 80, 14, 14, true);
        for (std::uint32_t y = 0; y < 120; ++y) {
            for (std::uint32_t x = 0; x < 160; ++x) {
                if (ball.on(x, y)) paint(frame, x, y, (x + y) % 6 < 3 ? Rgb{20, 60, 200} : Rgb{240, 240, 240});
            }
        }
        write_png(frame, dir / "clip" / ("frame" + std::to_string(f) + ".png"));
        write_mask_png(ball, dir / "clip" / ("mask" + std::to_string(f) + ".png"));
    }
}

}  // namespace forge
