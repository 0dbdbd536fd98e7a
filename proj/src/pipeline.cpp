#include "forge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "forge/codec.hpp"
#include "forge/detail_mask.hpp"
#include "forge/geometry.hpp"

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const ComposeParams& p) {
    json j{{"mode", to_string(p.mode)},
           {"mask_level", p.mask_level},
           {"lambda", p.lambda},
           {"guidance_scale", p.guidance_scale},
           {"alpha", p.alpha},
           {"occlusion", to_string(p.occlusion)},
           {"zoom_ratio", p.zoom_ratio},
           {"target_resolution", p.target_resolution},
           {"dilate_fraction", p.dilate_fraction},
           {"seed", p.seed},
           {"drop", p.drop},
           {"instruction", nullptr},
           {"location", nullptr}};
    if (p.drop) j["drop_probabilities"] = {{"id", p.drop_probabilities.id}, {"control", p.drop_probabilities.control}};
    if (p.instruction) j["instruction"] = *p.instruction;
    if (p.location) j["location"] = *p.location;
    return j;
}

namespace {

Image to_rgb(const Image& img) {
    if (img.channels() == 3) return img;
    Image out(img.width(), img.height(), 3);
    for (std::uint32_t y = 0; y < img.height(); ++y) {
        for (std::uint32_t x = 0; x < img.width(); ++x) {
            for (std::uint32_t c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, img.channels() == 1 ? 0 : c);
        }
    }
    return out;
}

json read_json_file(const fs::path& path) {
    const Bytes raw = read_file(path);
    try {
        return json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
}

}  // namespace

ComposeInputs load_inputs(const ComposeJob& job) {
    ComposeInputs in;
    const Bytes bg = read_file(job.background);
    const Bytes ref = read_file(job.reference);
    in.background = decode_png(bg);
    in.reference = decode_png(ref);
    in.input_hashes["background"] = sha256_hex(bg);
    in.input_hashes["reference"] = sha256_hex(ref);
    if (job.background_depth) {
        const Bytes raw = read_file(*job.background_depth);
        in.background_depth = DepthMap::clamped(decode_pfm(raw));
        in.input_hashes["background_depth"] = sha256_hex(raw);
    }
    if (job.annotations) {
        const Bytes raw = read_file(*job.annotations);
        try {
            in.annotations = json::parse(raw.begin(), raw.end()).get<SceneAnnotation>();
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaViolation, job.annotations->string() + ": " + e.what());
        }
        in.input_hashes["annotations"] = sha256_hex(raw);
    }
    if (job.region) {
        const Bytes raw = read_file(*job.region);
        in.region = decode_mask_png(raw);
        in.input_hashes["region"] = sha256_hex(raw);
    }
    return in;
}

ComposeResult compose(const ComposeInputs& in, const ComposeParams& p, const ClientSet& clients, const fs::path& out_dir,
                      const json& endpoints) {
    if (p.instruction.has_value() == p.location.has_value()) {
        fail(ErrorCode::InvalidArgument, "give exactly one of an instruction or an explicit location");
    }
    MaskLevel level(p.mask_level);
    fs::create_directories(out_dir);

    json stages = json::array();
    json header{{"command", "compose"},
                {"params", to_json(p)},
                {"inputs", in.input_hashes},
                {"clients", endpoints},
                {"stages", nullptr},
                {"failed_stage", nullptr}};
    auto stage = [&](const char* name, const std::function<void()>& body) {
        try {
            body();
            stages.push_back(name);
        } catch (const Error& e) {
            header["stages"] = stages;
            header["failed_stage"] = name;
            header["error"] = {{"code", to_string(e.code())}, {"message", e.message()}};
            write_manifest(out_dir, header);
            throw;
        }
    };

    ComposeResult result;
    const Image background = to_rgb(in.background);
    Image reference_rgb;
    Mask ref_mask;
    DepthMap bg_depth, ref_depth;
    FusionResult fusion;
    Mask aug;
    HFMap hf;
    Image collage, reference_crop;
    Image composite;

    stage("segment", [&] {
        ref_mask = clients.segment->segment(in.reference, std::nullopt);
        reference_rgb = to_rgb(in.reference);
        write_mask_png(ref_mask, out_dir / "reference_mask.png");
    });
    stage("depth", [&] {
        bg_depth = in.background_depth ? *in.background_depth : clients.depth->predict(background);
        if (bg_depth.width() != background.width() || bg_depth.height() != background.height()) {
            fail(ErrorCode::DimensionMismatch, "background depth does not match the background");
        }
        ref_depth = clients.depth->predict(reference_rgb);
        write_pfm(bg_depth, out_dir / "background_depth.pfm");
        write_pfm(ref_depth, out_dir / "reference_depth.pfm");
    });
    stage("locate", [&] {
        if (p.location) {
            result.location = Location25D::make(p.location->bbox, p.location->depth);
            return;
        }
        const LocateResponse r =
            clients.locate->locate(background, bg_depth, *p.instruction, in.annotations ? &*in.annotations : nullptr);
        result.location = r.location;
        result.located = true;
        write_text(out_dir / "locate_transcript.txt", r.raw_text + "\n");
    });
    write_text(out_dir / "location.json", json(result.location).dump(2) + "\n");
    stage("fuse", [&] {
        FusionRequest req;
        req.bg_depth = bg_depth;
        req.obj_depth = ref_depth;
        const bool region_mode = p.mode == FusionMode::id_transfer || p.mode == FusionMode::inpaint;
        req.obj_mask = region_mode && in.region ? *in.region : ref_mask;
        req.location = result.location;
        req.mode = p.mode;
        req.alpha = p.alpha;
        req.occlusion = p.occlusion;
        fusion = fuse(req);
        write_pfm(fusion.fused_depth, out_dir / "fused_depth.pfm");
        write_pfm(fusion.object_depth, out_dir / "object_depth.pfm");
        write_mask_png(fusion.scene_mask, out_dir / "scene_mask.png");
        write_mask_png(fusion.placed_obj_mask, out_dir / "placed_mask.png");
    });
    stage("augment_mask", [&] {
        aug = augment_mask(ref_mask, level, p.dilate_fraction);
        write_mask_png(aug, out_dir / "aug_mask.png");
    });
    stage("hf_extract", [&] {
        hf = hf_extract(reference_rgb, aug);
        write_pfm_map(hf.raster, out_dir / "hf_map.pfm");
        write_png(render_gray(hf.raster), out_dir / "hf_map.png");
    });
    stage("stitch_collage", [&] {
        collage = stitch_collage(background, hf, result.location.bbox);
        write_png(collage, out_dir / "collage_full.png");
    });
    stage("assemble_bundle", [&] {
        reference_crop = isolate_object(reference_rgb, ref_mask);
        BundleInputs bi{background, fusion, collage, reference_crop, result.location, p.mode, p.lambda,
                        p.guidance_scale, p.zoom_ratio, p.target_resolution};
        result.bundle = assemble_bundle(bi);
        if (p.drop) result.bundle = drop_conditions(result.bundle, p.drop_probabilities, p.seed);
        write_bundle(result.bundle, out_dir / "bundle");
    });
    stage("composite", [&] {
        composite = clients.composite->compose(result.bundle);
        const std::uint32_t n = p.target_resolution;
        if (composite.width() != n || composite.height() != n) {
            fail(ErrorCode::MalformedResponse, "compositor returned the wrong size");
        }
        write_png(composite, out_dir / "composite_crop.png");

        // Paste the crop back over the scene-mask pixels only.
        result.output = background;
        const CropSpec& crop = result.bundle.crop;
        const Image rgb = to_rgb(composite);
        for (int y = crop.square.y0; y < crop.square.y1; ++y) {
            for (int x = crop.square.x0; x < crop.square.x1; ++x) {
                if (!fusion.scene_mask.on(x, y)) continue;
                const auto sx = std::min<std::uint32_t>(
                    static_cast<std::uint32_t>((x - crop.square.x0 + 0.5) * crop.scale), n - 1);
                const auto sy = std::min<std::uint32_t>(
                    static_cast<std::uint32_t>((y - crop.square.y0 + 0.5) * crop.scale), n - 1);
                for (std::uint32_t c = 0; c < 3; ++c) result.output.at(x, y, c) = rgb.at(sx, sy, c);
            }
        }
        write_png(result.output, out_dir / "output.png");
    });

    header["stages"] = stages;
    header["located"] = result.located;
    result.manifest = write_manifest(out_dir, header);
    return result;
}

ComposeResult compose(const ComposeJob& job, const ClientSet& clients, const json& endpoints) {
    return compose(load_inputs(job), job.params, clients, job.out_dir, endpoints);
}

// ---- evaluation ------------------------------------------------------------------------

json published_reference() {
    return json{{"bbox_iou", 0.8515}, {"bbox_mse", 0.0496}, {"depth_mse", 0.0658}};
}

json run_eval(const fs::path& records_jsonl, const ClientSet& clients, const EvalOptions& options) {
    const std::vector<DatasetRecord> records = read_records(records_jsonl);
    if (records.empty()) fail(ErrorCode::InvalidArgument, "dataset has no records");
    const fs::path root = records_jsonl.parent_path();

    std::vector<LocationPair> pairs(records.size());
    std::vector<std::size_t> satisfied(records.size(), 0);
    std::vector<std::exception_ptr> errors(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            try {
                const DatasetRecord& r = records[i];
                const Image image = decode_png(read_file(root / r.counterfactual_image));
                const DepthMap depth =
                    r.depth_ref.empty() ? clients.depth->predict(to_rgb(image)) : read_pfm(root / r.depth_ref).map;
                SceneAnnotation ann;
                ann.image_ref = r.counterfactual_image;
                ann.instances = r.anchors;
                const LocateResponse res = clients.locate->locate(to_rgb(image), depth, r.instruction, &ann);
                pairs[i] = LocationPair{res.location, r.answer};
                const auto recheck = derive_relations(res.location, r.target_instance, r.anchors, depth, options.thresholds);
                for (const Relation& want : r.relations) {
                    satisfied[i] += std::count(recheck.begin(), recheck.end(), want) > 0;
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::max(1u, options.jobs); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::size_t total = 0, ok = 0, fully = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        total += records[i].relations.size();
        ok += satisfied[i];
        fully += satisfied[i] == records[i].relations.size();
    }
    json report = evaluate(pairs);
    report["relations_total"] = total;
    report["relations_satisfied"] = ok;
    report["relation_satisfaction"] = static_cast<double>(ok) / static_cast<double>(total);
    report["records_fully_satisfied"] = fully;
    report["paper_reference"] = published_reference();
    return report;
}

// ---- manifests ---------------------------------------------------------------------------

json hash_tree(const fs::path& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    json out = json::object();
    for (const std::string& f : files) out[f] = sha256_hex(read_file(dir / f));
    return out;
}

json write_manifest(const fs::path& dir, json header) {
    header["outputs"] = hash_tree(dir);
    write_text(dir / "manifest.json", header.dump(2) + "\n");
    return header;
}

std::vector<std::string> verify_manifest(const fs::path& manifest_path) {
    const json m = read_json_file(manifest_path);
    const fs::path root = manifest_path.parent_path();
    std::vector<std::string> bad;
    if (!m.contains("outputs") || !m["outputs"].is_object()) {
        fail(ErrorCode::SchemaViolation, manifest_path.string() + " has no outputs table");
    }
    for (const auto& [rel, hash] : m["outputs"].items()) {
        const fs::path p = root / rel;
        if (!fs::is_regular_file(p) || sha256_hex(read_file(p)) != hash.get<std::string>()) bad.push_back(rel);
    }
    return bad;
}

}  // namespace forge
