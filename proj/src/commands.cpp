#include "forge/commands.hpp"

#include <algorithm>

#include "forge/detail_mask.hpp"

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Bytes text_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes json_bytes(const json& j) { return text_bytes(j.dump(2) + "\n"); }

Mask object_mask(const DetailArgs& a, const Image& image, const ClientSet& clients) {
    Mask m = a.mask ? decode_mask_png(*a.mask) : clients.segment->segment(image, std::nullopt);
    if (m.width() != image.width() || m.height() != image.height()) {
        fail(ErrorCode::DimensionMismatch, "object image and mask differ in size");
    }
    return m;
}

}  // namespace

FileSet run_fuse(const FuseArgs& a) {
    FusionRequest req;
    req.bg_depth = DepthMap::clamped(decode_pfm(a.bg_depth));
    req.obj_depth = DepthMap::clamped(decode_pfm(a.obj_depth));
    req.obj_mask = decode_mask_png(a.obj_mask);
    req.location = Location25D::make(a.location.bbox, a.location.depth);
    req.mode = a.mode;
    req.alpha = a.alpha;
    req.occlusion = a.occlusion;
    const FusionResult r = fuse(req);

    json summary{{"location", req.location},
                 {"mode", to_string(a.mode)},
                 {"alpha", a.alpha},
                 {"occlusion", to_string(a.occlusion)},
                 {"background_anchor_depth", anchor_depth(req.bg_depth, req.location.bbox)},
                 {"fused_anchor_depth", anchor_depth(r.fused_depth, req.location.bbox)},
                 {"placed_pixels", r.placed_obj_mask.count()},
                 {"scene_mask_pixels", r.scene_mask.count()}};
    return FileSet{{"fused_depth.pfm", encode_pfm(r.fused_depth.raster())},
                   {"object_depth.pfm", encode_pfm(r.object_depth.raster())},
                   {"scene_mask.png", encode_mask_png(r.scene_mask)},
                   {"placed_mask.png", encode_mask_png(r.placed_obj_mask)},
                   {"fuse.json", json_bytes(summary)}};
}

FileSet run_detail_map(const DetailArgs& a, const ClientSet& clients) {
    const Image image = decode_png(a.image);
    const Mask seg = object_mask(a, image, clients);
    const Mask aug = augment_mask(seg, MaskLevel(a.mask_level), a.dilate_fraction);
    const HFMap hf = hf_extract(image, aug);
    return FileSet{{"detail_map.pfm", encode_pfm(hf.raster)},
                   {"detail_map.png", encode_png(render_gray(hf.raster))},
                   {"aug_mask.png", encode_mask_png(aug)}};
}

FileSet run_collage(const CollageArgs& a, const ClientSet& clients) {
    const Image scene = decode_png(a.scene);
    const BBox box = BBox::make(a.bbox.x1, a.bbox.y1, a.bbox.x2, a.bbox.y2);
    if (a.hf) {
        FloatMap raw = decode_pfm(*a.hf);
        for (float& v : raw.samples()) v = std::clamp(v, 0.0f, 1.0f);
        return FileSet{{"collage.png", encode_png(stitch_collage(scene, HFMap{std::move(raw)}, box))}};
    }
    if (!a.object) fail(ErrorCode::InvalidArgument, "collage needs an object image or a detail map");
    FileSet out = run_detail_map(*a.object, clients);
    const FloatMap hf = decode_pfm(out.at("detail_map.pfm"));
    out["collage.png"] = encode_png(stitch_collage(scene, HFMap{hf}, box));
    return out;
}

FileSet run_augment_mask(const AugmentArgs& a) {
    const Mask seg = decode_mask_png(a.mask);
    FileSet out;
    if (a.level) {
        out["mask_level" + std::to_string(*a.level) + ".png"] =
            encode_mask_png(augment_mask(seg, MaskLevel(*a.level), a.dilate_fraction));
        return out;
    }
    if (seg.count() == 0) fail(ErrorCode::EmptyMask, "mask is empty");
    const auto ladder = mask_ladder(seg, a.dilate_fraction);
    for (int i = 0; i < 5; ++i) out["mask_level" + std::to_string(i + 1) + ".png"] = encode_mask_png(ladder[i]);
    return out;
}

FileSet run_locate(const LocateArgs& a, const ClientSet& clients) {
    const Image bg = decode_png(a.background);
    const DepthMap depth = a.depth ? DepthMap::clamped(decode_pfm(*a.depth)) : clients.depth->predict(bg);
    if (depth.width() != bg.width() || depth.height() != bg.height()) {
        fail(ErrorCode::DimensionMismatch, "depth does not match the background");
    }
    const LocateResponse r = clients.locate->locate(bg, depth, a.instruction, a.annotations ? &*a.annotations : nullptr);
    return FileSet{{"location.json", json_bytes(json{{"location", r.location}, {"raw_text", r.raw_text}})}};
}

ComposeInputs decode_compose_inputs(const ComposeFiles& f) {
    ComposeInputs in;
    in.background = decode_png(f.background);
    in.reference = decode_png(f.reference);
    in.input_hashes["background"] = sha256_hex(f.background);
    in.input_hashes["reference"] = sha256_hex(f.reference);
    if (f.background_depth) {
        in.background_depth = DepthMap::clamped(decode_pfm(*f.background_depth));
        in.input_hashes["background_depth"] = sha256_hex(*f.background_depth);
    }
    if (f.annotations) {
        try {
            in.annotations = json::parse(f.annotations->begin(), f.annotations->end()).get<SceneAnnotation>();
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaViolation, std::string("annotations: ") + e.what());
        }
        in.input_hashes["annotations"] = sha256_hex(*f.annotations);
    }
    if (f.region) {
        in.region = decode_mask_png(*f.region);
        in.input_hashes["region"] = sha256_hex(*f.region);
    }
    return in;
}

FileSet run_video_pair(const VideoPairArgs& a) {
    if (a.frames.size() != a.masks.size()) fail(ErrorCode::InvalidArgument, "need one mask per frame");
    std::vector<VideoFrame> frames;
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        frames.push_back(VideoFrame{decode_png(a.frames[i]), decode_mask_png(a.masks[i])});
    }
    const VideoPair p = sample_video_pair(frames, a.seed, a.dilate_fraction);
    return FileSet{{"reference.png", encode_png(p.reference_crop)},
                   {"scene.png", encode_png(p.scene_image)},
                   {"scene_mask.png", encode_mask_png(p.scene_mask)},
                   {"ground_truth.png", encode_png(p.ground_truth)},
                   {"pair.json", json_bytes(json{{"frame_a", p.frame_a},
                                                 {"frame_b", p.frame_b},
                                                 {"level", p.level},
                                                 {"seed", a.seed}})}};
}

FileSet read_tree(const fs::path& dir) {
    FileSet out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        out[rel] = read_file(entry.path());
    }
    return out;
}

json write_outputs(const fs::path& dir, const FileSet& files, json header) {
    fs::create_directories(dir);
    for (const auto& [name, bytes] : files) {
        const fs::path p = dir / name;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_file(p, bytes);
    }
    return write_manifest(dir, std::move(header));
}

json write_outputs_as(const fs::path& out, const std::string& primary, const FileSet& files, json header) {
    const fs::path dir = out.parent_path().empty() ? fs::path(".") : out.parent_path();
    fs::create_directories(dir);
    const std::string stem = out.stem().string();
    json outputs = json::object();
    for (const auto& [name, bytes] : files) {
        const fs::path p = name == primary ? out : dir / (stem + "." + name);
        write_file(p, bytes);
        outputs[p.filename().string()] = sha256_hex(bytes);
    }
    header["outputs"] = outputs;
    write_text(dir / (out.filename().string() + ".manifest.json"), header.dump(2) + "\n");
    return header;
}

json files_to_json(const FileSet& files) {
    json out = json::object();
    for (const auto& [name, bytes] : files) out[name] = base64_encode(bytes);
    return out;
}

FileSet files_from_json(const json& j) {
    FileSet out;
    for (const auto& [name, data] : j.items()) out[name] = base64_decode(data.get<std::string>());
    return out;
}

}  // namespace forge
