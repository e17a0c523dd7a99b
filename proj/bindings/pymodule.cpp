#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "phaseparse/config.hpp"
#include "phaseparse/dataio.hpp"
#include "phaseparse/features.hpp"
#include "phaseparse/flow.hpp"
#include "phaseparse/metrics.hpp"
#include "phaseparse/motion.hpp"
#include "phaseparse/pipeline.hpp"
#include "phaseparse/synth.hpp"
#include "phaseparse/tcn.hpp"
#include "phaseparse/transition.hpp"

namespace py = pybind11;
using namespace phaseparse;

namespace {

FlowField flow_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 2)
        throw std::invalid_argument("flow array must have shape (H, W, 2)");
    FlowField f;
    f.height = static_cast<int>(arr.shape(0));
    f.width = static_cast<int>(arr.shape(1));
    const size_t n = static_cast<size_t>(f.width) * f.height;
    f.u.resize(n);
    f.v.resize(n);
    const float* data = arr.data();
    for (size_t i = 0; i < n; ++i) {
        f.u[i] = data[2 * i];
        f.v[i] = data[2 * i + 1];
    }
    return f;
}

py::array_t<float> flow_to_array(const FlowField& f) {
    py::array_t<float> arr({f.height, f.width, 2});
    float* data = arr.mutable_data();
    const size_t n = static_cast<size_t>(f.width) * f.height;
    for (size_t i = 0; i < n; ++i) {
        data[2 * i] = f.u[i];
        data[2 * i + 1] = f.v[i];
    }
    return arr;
}

FrameImage frame_from_array(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2 && !(arr.ndim() == 3 && arr.shape(2) == 3))
        throw std::invalid_argument("frame array must have shape (H, W) or (H, W, 3)");
    FrameImage img;
    img.height = static_cast<int>(arr.shape(0));
    img.width = static_cast<int>(arr.shape(1));
    img.channels = arr.ndim() == 2 ? 1 : 3;
    img.data.assign(arr.data(), arr.data() + arr.size());
    return img;
}

py::array_t<uint8_t> frame_to_array(const FrameImage& img) {
    if (img.channels == 1) {
        py::array_t<uint8_t> arr({img.height, img.width});
        std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
        return arr;
    }
    py::array_t<uint8_t> arr({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

PhaseProbabilitySeries series_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr, double fps) {
    if (arr.ndim() != 2 || arr.shape(1) != 2)
        throw std::invalid_argument("probabilities must have shape (T, 2)");
    PhaseProbabilitySeries s;
    s.fps = fps;
    const double* data = arr.data();
    s.p.resize(static_cast<size_t>(arr.shape(0)));
    for (py::ssize_t t = 0; t < arr.shape(0); ++t) s.p[t] = {data[2 * t], data[2 * t + 1]};
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Motion-supervised two-phase video parsing: flow, boundary flux, weak labels, "
              "frame classifier embeddings, temporal refinement and transition detection.";

    py::register_exception<IoError>(m, "IoError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<StaleArtifactError>(m, "StaleArtifactError");

    // file formats
    m.def("load_frame", [](const std::filesystem::path& p) { return frame_to_array(load_frame(p)); },
          py::arg("path"));
    m.def("store_frame",
          [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a,
             const std::filesystem::path& p) { store_frame(frame_from_array(a), p); },
          py::arg("frame"), py::arg("path"));
    m.def("load_flow", [](const std::filesystem::path& p) { return flow_to_array(load_flow(p)); },
          py::arg("path"));
    m.def("store_flow",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
             const std::filesystem::path& p) { store_flow(flow_from_array(a), p); },
          py::arg("flow"), py::arg("path"));
    m.def("load_tensor", [](const std::filesystem::path& p) {
        const TensorFile t = load_tensor(p);
        std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
        py::array_t<float> arr(shape);
        std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
        return arr;
    }, py::arg("path"));
    m.def("store_tensor",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
             const std::filesystem::path& p) {
              TensorFile t;
              for (py::ssize_t i = 0; i < a.ndim(); ++i)
                  t.dims.push_back(static_cast<uint32_t>(a.shape(i)));
              t.data.assign(a.data(), a.data() + a.size());
              store_tensor(t, p);
          },
          py::arg("tensor"), py::arg("path"));

    // motion measures
    m.def("boundary_flux",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a, int x0, int y0,
             int x1, int y1) { return boundary_flux(flow_from_array(a), Region{x0, y0, x1, y1}); },
          py::arg("flow"), py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"));
    m.def("divergence_sum",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a, int x0, int y0,
             int x1, int y1) { return divergence_sum(flow_from_array(a), Region{x0, y0, x1, y1}); },
          py::arg("flow"), py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"));
    m.def("direction_measure",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
             double region_fraction) {
              MotionParams params;
              params.region_fraction = region_fraction;
              return direction_measure(flow_from_array(a), params);
          },
          py::arg("flow"), py::arg("region_fraction") = 0.8);
    m.def("cumulative_signal", &cumulative_signal, py::arg("measures"));
    m.def("boundary_estimate", &boundary_estimate, py::arg("cumulative"));
    m.def("weak_labels", &weak_labels, py::arg("total_frames"), py::arg("boundary"));

    // optical flow
    m.def("estimate_flow_pair",
          [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& f1,
             const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& f2, int levels,
             int patch_size, int stride, int iterations) {
              FlowParams params;
              params.levels = levels;
              params.patch_size = patch_size;
              params.stride = stride;
              params.iterations = iterations;
              return flow_to_array(
                  estimate_flow_pair(frame_from_array(f1), frame_from_array(f2), params));
          },
          py::arg("frame1"), py::arg("frame2"), py::arg("levels") = 4, py::arg("patch_size") = 8,
          py::arg("stride") = 4, py::arg("iterations") = 8);

    // features
    m.def("extract_features",
          [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& frame) {
              const FeatureVector f = extract_features(frame_from_array(frame));
              py::array_t<double> arr(std::vector<py::ssize_t>{static_cast<py::ssize_t>(f.size())});
              std::copy(f.begin(), f.end(), arr.mutable_data());
              return arr;
          },
          py::arg("frame"));

    // transition detection
    m.def("partition_score",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
             int64_t t) { return partition_score(series_from_array(probs, 30.0), t); },
          py::arg("probs"), py::arg("t"));
    m.def("detect_transition",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
             double fps) {
              const TransitionResult r = detect_transition(series_from_array(probs, fps));
              py::dict d;
              d["transition_frame"] = r.frame;
              d["transition_seconds"] = r.seconds;
              d["score"] = r.score;
              return d;
          },
          py::arg("probs"), py::arg("fps") = 30.0);

    // metrics and model facts
    m.def("mae_medae", [](const std::vector<double>& pred, const std::vector<double>& gt) {
        const ErrorStats s = mae_medae(pred, gt);
        return py::make_tuple(s.mae, s.medae);
    }, py::arg("predicted"), py::arg("annotated"));
    m.def("receptive_field", &receptive_field, py::arg("layers"), py::arg("kernel") = 3);

    // synthetic generation and orchestration
    m.def("synth_video",
          [](int width, int height, int total_frames, double transition_fraction, uint64_t seed) {
              SynthConfig cfg;
              cfg.width = width;
              cfg.height = height;
              cfg.total_frames = total_frames;
              cfg.transition_fraction = transition_fraction;
              cfg.seed = seed;
              const auto [schedule, truth] = make_schedule(cfg);
              const RenderedVideo video = render_frames(schedule, cfg);
              py::list frames;
              for (const auto& f : video.frames) frames.append(frame_to_array(f));
              py::dict d;
              d["frames"] = frames;
              d["transition_frame"] = video.truth.transition_frame;
              d["velocity"] = video.truth.velocity;
              d["phase"] = video.truth.phase;
              return d;
          },
          py::arg("width") = 64, py::arg("height") = 64, py::arg("total_frames") = 300,
          py::arg("transition_fraction") = 0.4, py::arg("seed") = 0);
    m.def("run_pipeline",
          [](const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
              const PipelineConfig cfg = config_path.empty()
                                             ? PipelineConfig{}
                                             : PipelineConfig::from_file(config_path);
              const EvalReport report = run_pipeline(cfg, out_dir);
              py::dict d;
              for (const auto& m2 : report.methods) {
                  py::dict stats;
                  stats["mae_min"] = m2.stats.mae;
                  stats["medae_min"] = m2.stats.medae;
                  d[py::str(m2.method)] = stats;
              }
              return d;
          },
          py::arg("config_path"), py::arg("out_dir"));
}
