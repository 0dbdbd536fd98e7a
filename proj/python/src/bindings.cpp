#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "forge/codec.hpp"
#include "forge/commands.hpp"
#include "forge/conditioning.hpp"
#include "forge/dataset.hpp"
#include "forge/depth_fusion.hpp"
#include "forge/detail_mask.hpp"
#include "forge/geometry.hpp"
#include "forge/pipeline.hpp"
#include "forge/service.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace forge;
using nlohmann::json;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

// ---- numpy <-> rasters

Image to_image(const U8Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("image must be HxW or HxWxC");
    const auto h = static_cast<std::uint32_t>(a.shape(0)), w = static_cast<std::uint32_t>(a.shape(1));
    const auto c = a.ndim() == 3 ? static_cast<std::uint32_t>(a.shape(2)) : 1u;
    return Image(w, h, c, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

FloatMap to_map(const F32Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    const auto h = static_cast<std::uint32_t>(a.shape(0)), w = static_cast<std::uint32_t>(a.shape(1));
    return FloatMap(w, h, 1, std::vector<float>(a.data(), a.data() + a.size()));
}

Mask to_mask(const F32Array& a) {
    FloatMap m = to_map(a);
    for (float& v : m.samples()) v = v >= 0.5f ? 1.0f : 0.0f;
    return Mask(std::move(m));
}

py::array from_image(const Image& img) {
    std::vector<py::ssize_t> shape{py::ssize_t(img.height()), py::ssize_t(img.width())};
    if (img.channels() != 1) shape.push_back(img.channels());
    py::array_t<std::uint8_t> out(shape);
    std::copy(img.samples().begin(), img.samples().end(), out.mutable_data());
    return out;
}

py::array from_map(const FloatMap& m) {
    py::array_t<float> out({py::ssize_t(m.height()), py::ssize_t(m.width())});
    std::copy(m.samples().begin(), m.samples().end(), out.mutable_data());
    return out;
}

py::array from_mask(const Mask& m) {
    py::array_t<bool> out({py::ssize_t(m.height()), py::ssize_t(m.width())});
    bool* p = out.mutable_data();
    for (std::uint32_t y = 0; y < m.height(); ++y)
        for (std::uint32_t x = 0; x < m.width(); ++x) *p++ = m.on(x, y);
    return out;
}

BBox to_bbox(const std::vector<double>& v) {
    if (v.size() != 4) throw py::value_error("bbox needs 4 numbers");
    return BBox::make(v[0], v[1], v[2], v[3]);
}

std::vector<double> from_bbox(const BBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

// JSON crosses the boundary as Python objects via the json module.
py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::object& o) { return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }

py::dict files_to_py(const FileSet& files) {
    py::dict d;
    for (const auto& [name, bytes] : files) d[py::str(name)] = py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return d;
}

}  // namespace

PYBIND11_MODULE(_forge, m) {
    m.doc() = "Native core of forge: geometry, depth fusion, detail maps, conditioning and the compose pipeline.";

    static py::exception<Error> forge_error(m, "ForgeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(forge_error.ptr())(std::string(to_string(e.code())) + ": " + e.message());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(forge_error.ptr(), exc.ptr());
        }
    });

    // geometry
    m.def("iou", [](const std::vector<double>& a, const std::vector<double>& b) { return iou(to_bbox(a), to_bbox(b)); });
    m.def("bbox_mse", [](const std::vector<double>& a, const std::vector<double>& b) { return bbox_mse(to_bbox(a), to_bbox(b)); });
    m.def(
        "zoom_in",
        [](std::uint32_t w, std::uint32_t h, const std::vector<double>& box, double ratio, std::uint32_t target) {
            const CropSpec c = zoom_in(w, h, to_bbox(box), ratio, target);
            py::dict d;
            d["square"] = std::vector<int>{c.square.x0, c.square.y0, c.square.x1, c.square.y1};
            d["scale"] = c.scale;
            d["target_resolution"] = c.target_resolution;
            return d;
        },
        py::arg("width"), py::arg("height"), py::arg("bbox"), py::arg("ratio") = kDefaultZoomRatio,
        py::arg("target") = kDefaultTargetResolution);

    // depth fusion
    m.def(
        "fuse",
        [](const F32Array& bg, const F32Array& obj, const F32Array& mask, const std::vector<double>& bbox, double depth,
           const std::string& mode, double alpha, const std::string& occlusion) {
            FusionRequest r;
            r.bg_depth = DepthMap(to_map(bg));
            r.obj_depth = DepthMap(to_map(obj));
            r.obj_mask = to_mask(mask);
            r.location = Location25D::make(to_bbox(bbox), depth);
            r.mode = parse_fusion_mode(mode);
            r.alpha = alpha;
            r.occlusion = parse_occlusion_rule(occlusion);
            const FusionResult f = fuse(r);
            py::dict d;
            d["fused_depth"] = from_map(f.fused_depth.raster());
            d["scene_mask"] = from_mask(f.scene_mask);
            d["placed_obj_mask"] = from_mask(f.placed_obj_mask);
            d["object_depth"] = from_map(f.object_depth.raster());
            return d;
        },
        py::arg("bg_depth"), py::arg("obj_depth"), py::arg("obj_mask"), py::arg("bbox"), py::arg("depth"),
        py::arg("mode") = "place", py::arg("alpha") = 1.0, py::arg("occlusion") = "nearest_wins");
    m.def("anchor_depth", [](const F32Array& depth, const std::vector<double>& bbox) {
        return anchor_depth(DepthMap(to_map(depth)), to_bbox(bbox));
    });

    // detail maps and masks
    m.def("hf_extract", [](const U8Array& image, const F32Array& mask) {
        return from_map(hf_extract(to_image(image), to_mask(mask)).raster);
    });
    m.def(
        "augment_mask",
        [](const F32Array& mask, int level, double dilate_fraction) {
            return from_mask(augment_mask(to_mask(mask), MaskLevel(level), dilate_fraction));
        },
        py::arg("mask"), py::arg("level"), py::arg("dilate_fraction") = kDefaultDilateFraction);
    m.def(
        "mask_ladder",
        [](const F32Array& mask, double dilate_fraction) {
            py::list out;
            for (const Mask& level : mask_ladder(to_mask(mask), dilate_fraction)) out.append(from_mask(level));
            return out;
        },
        py::arg("mask"), py::arg("dilate_fraction") = kDefaultDilateFraction);
    m.def("stitch_collage", [](const U8Array& scene, const F32Array& hf, const std::vector<double>& bbox) {
        return from_image(stitch_collage(to_image(scene), HFMap{to_map(hf)}, to_bbox(bbox)));
    });

    // conditioning
    m.def(
        "cfg_combine",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& uncond,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& cond, double scale) {
            std::vector<std::size_t> shape(uncond.shape(), uncond.shape() + uncond.ndim());
            std::vector<std::size_t> cshape(cond.shape(), cond.shape() + cond.ndim());
            const NdArray out = cfg_combine(GuidanceArrays{NdArray{shape, {uncond.data(), uncond.data() + uncond.size()}},
                                                           NdArray{cshape, {cond.data(), cond.data() + cond.size()}}, scale});
            py::array_t<double> arr(std::vector<py::ssize_t>(out.shape.begin(), out.shape.end()));
            std::copy(out.data.begin(), out.data.end(), arr.mutable_data());
            return arr;
        },
        py::arg("eps_uncond"), py::arg("eps_cond"), py::arg("scale"));
    m.def(
        "draw_drops",
        [](std::uint64_t id, double p_id, double p_control, std::uint64_t seed) {
            const DroppedConditions d = draw_drops(id, DropProbabilities{p_id, p_control}, seed);
            py::dict out;
            out["id"] = d.id;
            out["detail"] = d.detail;
            out["depth"] = d.depth;
            return out;
        },
        py::arg("bundle_id"), py::arg("p_id") = 0.5, py::arg("p_control") = 0.3, py::arg("seed") = 0);

    // mocks
    m.def("mock_depth", [](const U8Array& image) { return from_map(mock_depth(to_image(image)).raster()); });
    m.def(
        "mock_segment",
        [](const U8Array& image, std::optional<std::vector<double>> hint) {
            std::optional<BBox> h;
            if (hint) h = to_bbox(*hint);
            return from_mask(mock_segment(to_image(image), h));
        },
        py::arg("image"), py::arg("hint") = py::none());
    m.def("mock_inpaint", [](const U8Array& image, const F32Array& mask) {
        return from_image(mock_inpaint(to_image(image), to_mask(mask)));
    });

    // codecs
    m.def("read_png", [](const fs::path& p) { return from_image(read_png(p)); });
    m.def("write_png", [](const U8Array& image, const fs::path& p) { write_png(to_image(image), p); });
    m.def("read_pfm", [](const fs::path& p) { return from_map(read_pfm_map(p)); });
    m.def("write_pfm", [](const F32Array& map, const fs::path& p) { write_pfm_map(to_map(map), p); });

    // dataset, pipeline, evaluation
    m.def("write_coco_fixture", &write_coco_fixture, py::arg("dir"), py::arg("n_images") = 20, py::arg("seed") = 1);
    m.def("write_compose_fixture", &write_compose_fixture, py::arg("dir"));
    m.def(
        "build_dataset",
        [](const fs::path& annotations, const fs::path& depth_dir, const fs::path& out, std::size_t n, std::uint64_t seed,
           unsigned jobs) {
            DatasetOptions o;
            o.n = n;
            o.seed = seed;
            o.jobs = jobs;
            ClientSet mocks = mock_clients();
            py::gil_scoped_release release;
            const DatasetSummary s = build_dataset(load_coco(annotations, depth_dir), o, *mocks.inpaint, out);
            return s.records;
        },
        py::arg("annotations"), py::arg("depth_dir"), py::arg("out"), py::arg("n") = 100, py::arg("seed") = 0,
        py::arg("jobs") = 1);
    m.def(
        "run_eval",
        [](const fs::path& records, unsigned jobs) {
            EvalOptions o;
            o.jobs = jobs;
            json report;
            {
                py::gil_scoped_release release;
                report = run_eval(records, mock_clients(), o);
            }
            return to_py(report);
        },
        py::arg("records"), py::arg("jobs") = 1);
    m.def("published_reference", [] { return to_py(published_reference()); });
    m.def(
        "compose",
        [](const fs::path& background, const fs::path& reference, const fs::path& out_dir,
           std::optional<fs::path> background_depth, std::optional<fs::path> annotations, std::optional<std::string> instruction,
           std::optional<std::vector<double>> bbox, double depth, const py::dict& params) {
            ComposeJob job;
            job.background = background;
            job.reference = reference;
            job.background_depth = background_depth;
            job.annotations = annotations;
            job.out_dir = out_dir;
            job.params = compose_params_from_json(from_py(params), ComposeParams{});
            if (instruction) job.params.instruction = instruction;
            if (bbox) job.params.location = Location25D::make(to_bbox(*bbox), depth);
            ComposeResult r;
            {
                py::gil_scoped_release release;
                r = compose(job, mock_clients());
            }
            py::dict d;
            d["output"] = from_image(r.output);
            d["bbox"] = from_bbox(r.location.bbox);
            d["depth"] = r.location.depth;
            d["located"] = r.located;
            d["manifest"] = to_py(r.manifest);
            return d;
        },
        py::arg("background"), py::arg("reference"), py::arg("out_dir"), py::arg("background_depth") = py::none(),
        py::arg("annotations") = py::none(), py::arg("instruction") = py::none(), py::arg("bbox") = py::none(),
        py::arg("depth") = 0.5, py::arg("params") = py::dict());
    m.def("hash_tree", [](const fs::path& dir) { return to_py(hash_tree(dir)); });
    m.def("verify_manifest", &verify_manifest);

    // The service's /api handlers, in process with mock clients.
    m.def(
        "handle_api",
        [](const std::string& route, const py::object& body) {
            const std::string text = py::isinstance<py::str>(body) ? body.cast<std::string>() : from_py(body).dump();
            ApiResponse r;
            {
                py::gil_scoped_release release;
                r = handle_api(route, text, default_config(), mock_clients());
            }
            return py::make_tuple(r.status, to_py(r.body));
        },
        py::arg("route"), py::arg("body"));
    m.def("files_from_response", [](const py::object& files) { return files_to_py(files_from_json(from_py(files))); });
}
