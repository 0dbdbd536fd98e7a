// forge: command-line front end for the compositing toolkit.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "forge/commands.hpp"
#include "forge/config.hpp"
#include "forge/service.hpp"
#include "forge/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace forge;

namespace {

struct Globals {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
};

Config resolve(const Globals& g) {
    Config c = load_config(g.config_path ? std::optional<fs::path>(*g.config_path) : std::nullopt,
                           process_environment());
    if (g.seed) c.seed = *g.seed;
    if (g.jobs) c.jobs = *g.jobs;
    c.compose.seed = c.seed;
    return c;
}

json hashes(std::initializer_list<std::pair<const char*, const Bytes*>> inputs) {
    json out = json::object();
    for (const auto& [name, bytes] : inputs) {
        if (bytes != nullptr) out[name] = sha256_hex(*bytes);
    }
    return out;
}

Location25D location_from(const std::string& bbox, double depth) { return Location25D::make(parse_bbox(bbox), depth); }

void report(const fs::path& dir) { std::cout << "wrote " << (dir / "manifest.json").string() << "\n"; }

// --out is a directory unless it carries the primary output's extension, in
// which case the primary lands there and the rest sit beside it.
void emit(const fs::path& out, const std::string& primary, const FileSet& files, json header) {
    if (out.has_extension() && out.extension() == fs::path(primary).extension()) {
        write_outputs_as(out, primary, files, std::move(header));
        std::cout << "wrote " << out.string() << "\n";
        return;
    }
    write_outputs(out, files, std::move(header));
    report(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: depth-aware object compositing toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "TOML configuration file");
    app.add_option("--seed", g.seed, "Seed for every random choice (default from config, else 0)");
    app.add_option("--jobs", g.jobs, "Parallel workers for batch commands")->check(CLI::PositiveNumber);

    std::function<void()> action;

    // build-dataset
    auto* ds = app.add_subcommand("build-dataset", "Build counterfactual instruction/location records from COCO-style annotations");
    std::string coco, depth_dir, ds_out;
    std::size_t ds_n = 100;
    std::string templates = "varied";
    ds->add_option("--coco", coco, "annotations.json (COCO layout with mask_file per annotation)")->required();
    ds->add_option("--depth-dir", depth_dir, "Directory of <image stem>.pfm depth maps")->required();
    ds->add_option("--out", ds_out, "Output dataset directory")->required();
    ds->add_option("--n", ds_n, "Number of records")->check(CLI::PositiveNumber);
    ds->add_option("--templates", templates, "Instruction templates: canonical | varied")
        ->check(CLI::IsMember({"canonical", "varied"}));
    ds->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            const CocoSource src = load_coco(coco, depth_dir);
            DatasetOptions o;
            o.n = ds_n;
            o.seed = c.seed;
            o.jobs = c.jobs;
            o.record.thresholds = c.thresholds;
            o.record.templates = templates == "canonical" ? TemplateSet::canonical : TemplateSet::varied;
            o.record.inpaint_dilate_fraction = c.compose.dilate_fraction;
            const ClientSet clients = make_clients(c);
            const DatasetSummary s = build_dataset(src, o, *clients.inpaint, ds_out);
            write_manifest(ds_out, json{{"command", "build-dataset"},
                                        {"seed", c.seed},
                                        {"n", ds_n},
                                        {"templates", templates},
                                        {"inputs", {{"coco", sha256_hex(read_file(coco))}}},
                                        {"clients", describe_endpoints(c)}});
            std::cout << s.records << " records\n";
            report(ds_out);
        };
    });

    // fuse-depth
    auto* fz = app.add_subcommand("fuse-depth", "Rescale an object depth patch and fuse it into a background depth map");
    std::string bg_depth, obj_depth, obj_mask, bbox, fz_out, mode = "place", occlusion = "nearest_wins";
    double depth = 0.5, alpha = 1.0;
    fz->add_option("--bg-depth", bg_depth, "Background depth (PFM, larger = nearer)")->required();
    fz->add_option("--obj-depth", obj_depth, "Object depth in the reference frame (PFM)")->required();
    fz->add_option("--obj-mask", obj_mask, "Object mask (PNG); a background-sized mask for id_transfer/inpaint")->required();
    fz->add_option("--bbox", bbox, "Target box x1,y1,x2,y2 (normalized)")->required();
    fz->add_option("--depth", depth, "Target depth in [0,1]")->required();
    fz->add_option("--mode", mode, "place | replace | id_transfer | inpaint")
        ->check(CLI::IsMember({"place", "replace", "id_transfer", "inpaint"}));
    fz->add_option("--alpha", alpha, "Scale of the object's depth relief");
    fz->add_option("--occlusion", occlusion, "nearest_wins | overwrite")->check(CLI::IsMember({"nearest_wins", "overwrite"}));
    fz->add_option("--out", fz_out, "Output directory, or a .pfm path for the fused depth")->required();
    fz->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            FuseArgs a{read_file(bg_depth), read_file(obj_depth), read_file(obj_mask), location_from(bbox, depth),
                       parse_fusion_mode(mode), alpha, parse_occlusion_rule(occlusion)};
            emit(fz_out, "fused_depth.pfm", run_fuse(a),
                 json{{"command", "fuse-depth"},
                      {"seed", c.seed},
                      {"args", {{"location", a.location}, {"mode", mode}, {"alpha", alpha}, {"occlusion", occlusion}}},
                      {"inputs", hashes({{"bg_depth", &a.bg_depth}, {"obj_depth", &a.obj_depth}, {"obj_mask", &a.obj_mask}})}});
        };
    });

    // detail-map and collage share object options
    std::string obj_image, obj_seg, dm_out, scene, cl_out, cl_bbox, cl_hf;
    std::optional<int> level;
    auto* dm = app.add_subcommand("detail-map", "Sobel high-frequency map of an object inside its augmented mask");
    auto* cl = app.add_subcommand("collage", "Stitch an object's detail map into a scene box");
    dm->add_option("--obj,--image", obj_image, "Object image (PNG; RGBA alpha serves as the mask)")->required();
    auto* cl_obj = cl->add_option("--obj,--image", obj_image, "Object image (PNG; RGBA alpha serves as the mask)");
    auto* cl_hf_opt = cl->add_option("--hf", cl_hf, "Precomputed detail map (PFM) to stitch instead of an object");
    cl_obj->excludes(cl_hf_opt);
    for (CLI::App* sub : {dm, cl}) {
        sub->add_option("--mask", obj_seg, "Object mask (PNG); segmented with the segment client when omitted");
        sub->add_option("--level", level, "Mask augmentation level 1..5 (default from config)")->check(CLI::Range(1, 5));
    }
    dm->add_option("--out", dm_out, "Output directory, or a .pfm path for the detail map")->required();
    cl->add_option("--scene", scene, "Scene image (PNG)")->required();
    cl->add_option("--bbox", cl_bbox, "Target box x1,y1,x2,y2 (normalized)")->required();
    cl->add_option("--out", cl_out, "Output directory, or a .png path for the collage")->required();
    auto detail_args = [&](const Config& c) {
        DetailArgs d{read_file(obj_image), std::nullopt, level.value_or(c.compose.mask_level), c.compose.dilate_fraction};
        if (!obj_seg.empty()) d.mask = read_file(obj_seg);
        return d;
    };
    dm->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            const DetailArgs d = detail_args(c);
            emit(dm_out, "detail_map.pfm", run_detail_map(d, make_clients(c)),
                 json{{"command", "detail-map"},
                      {"seed", c.seed},
                      {"args", {{"level", d.mask_level}, {"dilate_fraction", d.dilate_fraction}}},
                      {"inputs", hashes({{"image", &d.image}, {"mask", d.mask ? &*d.mask : nullptr}})}});
        };
    });
    cl->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            CollageArgs a{read_file(scene), std::nullopt, std::nullopt, parse_bbox(cl_bbox)};
            json args{{"bbox", a.bbox}};
            if (!cl_hf.empty()) {
                a.hf = read_file(cl_hf);
            } else {
                if (obj_image.empty()) throw Error(ErrorCode::InvalidArgument, "collage needs --obj or --hf");
                a.object = detail_args(c);
                args["level"] = a.object->mask_level;
            }
            const Bytes* mask = a.object && a.object->mask ? &*a.object->mask : nullptr;
            emit(cl_out, "collage.png", run_collage(a, make_clients(c)),
                 json{{"command", "collage"},
                      {"seed", c.seed},
                      {"args", args},
                      {"inputs", hashes({{"scene", &a.scene},
                                         {"image", a.object ? &a.object->image : nullptr},
                                         {"hf", a.hf ? &*a.hf : nullptr},
                                         {"mask", mask}})}});
        };
    });

    // augment-mask
    auto* am = app.add_subcommand("augment-mask", "Coarsen a segmentation mask along the five-level ladder");
    std::string am_mask, am_out;
    std::optional<int> am_level;
    am->add_option("--mask", am_mask, "Segmentation mask (PNG)")->required();
    am->add_option("--level", am_level, "Single level 1..5 (all five when omitted)")->check(CLI::Range(1, 5));
    am->add_option("--out", am_out, "Output directory, or a .png path with --level")->required();
    am->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            const AugmentArgs a{read_file(am_mask), am_level, c.compose.dilate_fraction};
            const std::string primary = am_level ? "mask_level" + std::to_string(*am_level) + ".png" : std::string();
            emit(am_out, primary, run_augment_mask(a),
                 json{{"command", "augment-mask"},
                      {"seed", c.seed},
                      {"args", {{"level", am_level ? json(*am_level) : json(nullptr)}, {"dilate_fraction", a.dilate_fraction}}},
                      {"inputs", hashes({{"mask", &a.mask}})}});
        };
    });

    // locate
    auto* lc = app.add_subcommand("locate", "Ask the locate backend for a box and depth from an instruction");
    std::string lc_bg, lc_depth, lc_ann, lc_instruction, lc_out;
    lc->add_option("--background", lc_bg, "Background image (PNG)")->required();
    lc->add_option("--depth", lc_depth, "Background depth (PFM); depth client when omitted");
    lc->add_option("--annotations", lc_ann, "Scene annotation JSON the mock locator resolves names against");
    lc->add_option("--instruction", lc_instruction, "Text instruction")->required();
    lc->add_option("--out", lc_out, "Output directory, or a .json path for the location")->required();
    lc->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            LocateArgs a{read_file(lc_bg), std::nullopt, lc_instruction, std::nullopt};
            if (!lc_depth.empty()) a.depth = read_file(lc_depth);
            std::optional<Bytes> ann;
            if (!lc_ann.empty()) {
                ann = read_file(lc_ann);
                a.annotations = json::parse(ann->begin(), ann->end()).get<SceneAnnotation>();
            }
            emit(lc_out, "location.json", run_locate(a, make_clients(c)),
                 json{{"command", "locate"},
                      {"seed", c.seed},
                      {"args", {{"instruction", lc_instruction}}},
                      {"inputs", hashes({{"background", &a.background},
                                         {"depth", a.depth ? &*a.depth : nullptr},
                                         {"annotations", ann ? &*ann : nullptr}})},
                      {"clients", describe_endpoints(c)}});
        };
    });

    // compose
    auto* cp =app.add_subcommand("compose", "Run the full placement pipeline and write every intermediate");
    ComposeJob job;
    std::string cp_bg, cp_ref, cp_bgd, cp_ann, cp_region, cp_instruction, cp_bbox, cp_mode, cp_occ, cp_out;
    std::optional<double> cp_depth, cp_lambda, cp_s, cp_alpha, cp_zoom;
    std::optional<int> cp_level;
    std::optional<std::uint32_t> cp_res;
    bool cp_drop = false;
    cp->add_option("--background", cp_bg, "Background image (PNG)")->required();
    cp->add_option("--reference", cp_ref, "Reference object image (PNG; RGBA alpha is the object)")->required();
    cp->add_option("--background-depth", cp_bgd, "Background depth (PFM) used instead of the depth client");
    cp->add_option("--annotations", cp_ann, "Scene annotation JSON the mock locator resolves names against");
    cp->add_option("--region", cp_region, "Background-sized mask for id_transfer / inpaint modes (PNG)");
    auto* instr_opt = cp->add_option("--instruction", cp_instruction, "Text instruction for the locator");
    auto* bbox_opt = cp->add_option("--bbox", cp_bbox, "Explicit box x1,y1,x2,y2 (skips the locator)");
    cp->add_option("--depth", cp_depth, "Explicit target depth in [0,1] (with --bbox)");
    instr_opt->excludes(bbox_opt);
    cp->add_option("--mode", cp_mode, "place | replace | id_transfer | inpaint")
        ->check(CLI::IsMember({"place", "replace", "id_transfer", "inpaint"}));
    cp->add_option("--occlusion", cp_occ, "nearest_wins | overwrite")->check(CLI::IsMember({"nearest_wins", "overwrite"}));
    cp->add_option("--mask-level", cp_level, "Mask augmentation level 1..5")->check(CLI::Range(1, 5));
    cp->add_option("--lambda", cp_lambda, "Weight of depth against detail in the combined control");
    cp->add_option("--guidance-scale,-s", cp_s, "Classifier-free guidance scale");
    cp->add_option("--alpha", cp_alpha, "Scale of the object's depth relief");
    cp->add_option("--zoom-ratio", cp_zoom, "Square crop side as a multiple of the box's long side");
    cp->add_option("--resolution", cp_res, "Working resolution of the crop");
    cp->add_flag("--drop", cp_drop, "Apply seeded condition dropping to the bundle");
    cp->add_option("--out", cp_out, "Output directory")->required();
    cp->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            job.background = cp_bg;
            job.reference = cp_ref;
            if (!cp_bgd.empty()) job.background_depth = cp_bgd;
            if (!cp_ann.empty()) job.annotations = cp_ann;
            if (!cp_region.empty()) job.region = cp_region;
            job.params = c.compose;
            ComposeParams& p = job.params;
            if (!cp_instruction.empty()) p.instruction = cp_instruction;
            if (!cp_bbox.empty()) {
                if (!cp_depth) throw Error(ErrorCode::InvalidArgument, "--bbox needs --depth");
                p.location = location_from(cp_bbox, *cp_depth);
            }
            if (!cp_mode.empty()) p.mode = parse_fusion_mode(cp_mode);
            if (!cp_occ.empty()) p.occlusion = parse_occlusion_rule(cp_occ);
            if (cp_level) p.mask_level = *cp_level;
            if (cp_lambda) p.lambda = *cp_lambda;
            if (cp_s) p.guidance_scale = *cp_s;
            if (cp_alpha) p.alpha = *cp_alpha;
            if (cp_zoom) p.zoom_ratio = *cp_zoom;
            if (cp_res) p.target_resolution = *cp_res;
            p.drop = cp_drop;
            job.out_dir = cp_out;
            const ComposeResult r = compose(job, make_clients(c), describe_endpoints(c));
            std::cout << "location " << json(r.location).dump() << "\n";
            report(cp_out);
        };
    });

    // eval-mllm
    auto* ev = app.add_subcommand("eval-mllm", "Score the locate backend on a dataset's records");
    std::string ev_ds, ev_out;
    ev->add_option("--dataset", ev_ds, "records.jsonl written by build-dataset")->required();
    ev->add_option("--out", ev_out, "Output directory, or a .json path for the report")->required();
    ev->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            const json rep = run_eval(ev_ds, make_clients(c), EvalOptions{c.thresholds, c.jobs});
            const std::string text = rep.dump(2) + "\n";
            std::cout << text;
            emit(ev_out, "report.json", FileSet{{"report.json", Bytes(text.begin(), text.end())}},
                 json{{"command", "eval-mllm"},
                      {"seed", c.seed},
                      {"inputs", {{"dataset", sha256_hex(read_file(ev_ds))}}},
                      {"clients", describe_endpoints(c)}});
        };
    });

    // serve
    auto* sv = app.add_subcommand("serve", "Local HTTP service for the placement studio");
    std::optional<std::string> sv_host;
    std::optional<int> sv_port;
    bool sv_mock = false;
    sv->add_option("--host", sv_host, "Bind address (default from config)");
    sv->add_option("--port", sv_port, "Port, 0 picks a free one (default from config)");
    sv->add_flag("--mock-backend", sv_mock, "Also serve the /v1 backend protocol with the deterministic mocks");
    sv->callback([&] {
        action = [&] {
            Config c = resolve(g);
            if (sv_host) c.host = *sv_host;
            if (sv_port) c.port = *sv_port;
            Service service(c, ServiceOptions{sv_mock});
            const int port = service.bind();
            std::cout << "listening on http://" << c.host << ":" << port << std::endl;
            service.run();
        };
    });

    // sample-video-pair
    auto* vp = app.add_subcommand("sample-video-pair", "Draw a reference / masked-scene / ground-truth triple from a clip");
    std::vector<std::string> vp_frames, vp_masks;
    std::string vp_out;
    vp->add_option("--frames", vp_frames, "Frame images in order (PNG)")->required()->delimiter(',');
    vp->add_option("--masks", vp_masks, "Instance masks, one per frame (PNG)")->required()->delimiter(',');
    vp->add_option("--out", vp_out, "Output directory")->required();
    vp->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            VideoPairArgs a;
            a.seed = c.seed;
            a.dilate_fraction = c.compose.dilate_fraction;
            json inputs = json::array();
            for (const auto& f : vp_frames) a.frames.push_back(read_file(f));
            for (const auto& m : vp_masks) a.masks.push_back(read_file(m));
            for (std::size_t i = 0; i < a.frames.size(); ++i) inputs.push_back(sha256_hex(a.frames[i]));
            write_outputs(vp_out, run_video_pair(a), json{{"command", "sample-video-pair"}, {"seed", c.seed}, {"inputs", inputs}});
            report(vp_out);
        };
    });

    // verify
    auto* vf = app.add_subcommand("verify", "Re-hash a run's outputs against its manifest.json");
    std::string vf_path;
    vf->add_option("path", vf_path, "Output directory, manifest file, or single-file output")->required();
    int verify_status = 0;
    vf->callback([&] {
        action = [&] {
            fs::path m = vf_path;
            if (fs::is_directory(m)) {
                m /= "manifest.json";
            } else if (fs::path sibling = m.string() + ".manifest.json"; fs::exists(sibling) || m.extension() != ".json") {
                m = sibling;  // single-file output; .json outputs (location, report) have one too
            }
            const auto bad = verify_manifest(m);
            for (const auto& f : bad) std::cout << "MISMATCH " << f << "\n";
            if (bad.empty()) std::cout << "ok\n";
            verify_status = bad.empty() ? 0 : 1;
        };
    });

    // make-fixtures
    auto* mf = app.add_subcommand("make-fixtures", "Write the synthetic COCO-mini and compose fixtures");
    std::string mf_out;
    std::size_t mf_n = 20;
    mf->add_option("--out", mf_out, "Fixture directory")->required();
    mf->add_option("--images", mf_n, "Number of COCO-mini scenes")->check(CLI::PositiveNumber);
    mf->callback([&] {
        action = [&] {
            const Config c = resolve(g);
            write_coco_fixture(fs::path(mf_out) / "coco_mini", mf_n, c.seed == 0 ? 1 : c.seed);
            write_compose_fixture(fs::path(mf_out) / "compose");
            std::cout << "fixtures in " << mf_out << "\n";
        };
    });

    // mock-backend: one protocol request on stdin, reply on stdout
    auto* mb = app.add_subcommand("mock-backend", "Answer one backend protocol request from stdin with the mocks");
    std::string mb_kind;
    mb->add_option("--kind", mb_kind, "depth | segment | inpaint | locate | composite (default $FORGE_CLIENT_KIND)");
    mb->callback([&] {
        action = [&] {
            std::string kind = mb_kind;
            if (kind.empty()) {
                const char* env = std::getenv("FORGE_CLIENT_KIND");
                kind = env != nullptr ? env : "";
            }
            json reply;
            try {
                const std::string in((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
                reply = handle_backend_request(parse_client_kind(kind), json::parse(in), mock_clients(resolve(g).thresholds));
            } catch (const Error& e) {
                reply = error_body(e.code(), e.message());
            } catch (const json::exception& e) {
                reply = error_body(ErrorCode::SchemaViolation, e.what());
            }
            std::cout << reply.dump() << "\n";
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (action) action();
    } catch (const Error& e) {
        std::cerr << "forge: " << e.what() << "\n";
        return e.code() == ErrorCode::PortInUse ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "forge: " << e.what() << "\n";
        return 1;
    }
    return verify_status;
}
