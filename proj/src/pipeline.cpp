#include "phaseparse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "phaseparse/features.hpp"
#include "phaseparse/flow.hpp"
#include "phaseparse/motion.hpp"
#include "phaseparse/rng.hpp"
#include "phaseparse/svg.hpp"
#include "phaseparse/tcn.hpp"
#include "phaseparse/transition.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace phaseparse {

std::vector<std::string> all_methods() {
    return {kMethodMotion, kMethodTcnMotion, kMethodTcnFeatures, kMethodTcnEmbeddings,
            kMethodTcnCombined};
}

std::string video_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "video_%03d", index);
    return buf;
}

namespace {

std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", index);
    return buf;
}

std::string flow_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "flow_%06d.flo", index);
    return buf;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Stage bookkeeping: a marker file records the config hash a stage was built
// with. Matching hash -> skip; different hash -> stale artifacts.
fs::path stage_marker(const fs::path& out, const std::string& stage) {
    return out / ".stages" / (stage + ".json");
}

bool stage_ready(const fs::path& out, const std::string& stage, const std::string& hash) {
    const fs::path marker = stage_marker(out, stage);
    if (!fs::exists(marker)) return false;
    std::ifstream in(marker);
    json j;
    in >> j;
    const std::string recorded = j.value("hash", "");
    if (recorded == hash) return true;
    throw StaleArtifactError("stage '" + stage + "' under " + out.string() +
                             " was built with config hash " + recorded + " but the current hash is " +
                             hash + "; delete " + (out / stage).string() + " and " + marker.string() +
                             " (or point --out at a fresh directory) to rebuild");
}

void mark_stage(const fs::path& out, const std::string& stage, const std::string& hash) {
    fs::create_directories(out / ".stages");
    json j;
    j["stage"] = stage;
    j["hash"] = hash;
    std::ofstream o(stage_marker(out, stage), std::ios::trunc);
    o << j.dump(2) << '\n';
}

std::string combine_hash(const std::string& text, const std::vector<std::string>& parents) {
    std::string all = text;
    for (const auto& p : parents) all += p;
    return hash_hex(fnv1a64(all));
}

std::vector<double> read_signal_values(const fs::path& path) {
    return load_signal(path).values;
}

std::vector<std::vector<double>> read_matrix(const fs::path& path) {
    return matrix_from_tensor(load_tensor(path));
}

std::vector<int> weak_labels_as_classes(const std::vector<int>& phase_labels) {
    std::vector<int> out(phase_labels.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = phase_labels[i] - 1;
    return out;
}

void write_transition_json(const TransitionResult& r, const fs::path& path) {
    json j;
    j["transition_frame"] = r.frame;
    j["transition_seconds"] = r.seconds;
    j["score"] = r.score;
    std::ofstream o(path, std::ios::trunc);
    o << j.dump(2) << '\n';
}

TransitionResult read_transition_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoCode::OpenFailed, "cannot open " + path.string());
    json j;
    in >> j;
    TransitionResult r;
    r.frame = j.at("transition_frame").get<int64_t>();
    r.seconds = j.at("transition_seconds").get<double>();
    r.score = j.at("score").get<double>();
    return r;
}

}  // namespace

void write_truth_csv(const GroundTruth& truth, const fs::path& path) {
    std::string buf = "frame,phase,velocity\n";
    char tmp[64];
    for (size_t t = 0; t < truth.phase.size(); ++t) {
        std::snprintf(tmp, sizeof(tmp), "%zu,%d,%.17g\n", t, truth.phase[t], truth.velocity[t]);
        buf += tmp;
    }
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << buf;
    if (!out) throw IoError(IoCode::WriteFailed, "cannot write " + path.string());
}

void write_truth_json(const GroundTruth& truth, const fs::path& path) {
    json j;
    j["transition_frame"] = truth.transition_frame;
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw IoError(IoCode::WriteFailed, "cannot write " + path.string());
}

int64_t read_truth_transition(const fs::path& json_path) {
    std::ifstream in(json_path);
    if (!in)
        throw IoError(IoCode::OpenFailed, "corpus ground truth missing: " + json_path.string());
    json j;
    in >> j;
    return j.at("transition_frame").get<int64_t>();
}

void write_labels_csv(const std::vector<int>& labels, const fs::path& path) {
    std::string buf = "frame,phase\n";
    char tmp[40];
    for (size_t t = 0; t < labels.size(); ++t) {
        std::snprintf(tmp, sizeof(tmp), "%zu,%d\n", t, labels[t]);
        buf += tmp;
    }
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << buf;
    if (!out) throw IoError(IoCode::WriteFailed, "cannot write " + path.string());
}

std::vector<int> read_labels_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoCode::OpenFailed, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "frame,phase") throw IoError(IoCode::BadHeader, "labels: bad header in " + path.string());
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(IoCode::BadNumber, "labels: bad row in " + path.string());
        labels.push_back(std::stoi(line.substr(comma + 1)));
    }
    return labels;
}

void synth_corpus(const PipelineConfig& cfg, const fs::path& corpus_dir) {
    const int threads = resolve_threads(cfg.threads);
    parallel_for(cfg.corpus.videos, threads, [&](int v) {
        const SynthConfig vc = cfg.video_synth_config(v);
        const auto [schedule, truth_unused] = make_schedule(vc);
        const RenderedVideo video = render_frames(schedule, vc);
        const fs::path vdir = corpus_dir / video_dir_name(v);
        fs::create_directories(vdir / "frames");
        for (size_t t = 0; t < video.frames.size(); ++t)
            store_frame(video.frames[t], vdir / "frames" / frame_file_name(static_cast<int>(t)));
        write_truth_csv(video.truth, vdir / "truth.csv");
        write_truth_json(video.truth, vdir / "truth.json");
        if (cfg.corpus.emit_flow) {
            const auto fields = synth_flow_fields(schedule, vc);
            fs::create_directories(vdir / "flow");
            for (size_t i = 0; i < fields.size(); ++i)
                store_flow(fields[i], vdir / "flow" / flow_file_name(static_cast<int>(i)));
        }
    });
}

namespace {

struct StageContext {
    const PipelineConfig& cfg;
    fs::path out;
    int threads;
    std::string synth_hash, flow_hash, motion_hash, labels_hash, features_hash, frameclf_hash,
        embed_hash;
};

void run_stage(const StageContext& ctx, const std::string& stage, const std::string& hash,
               const std::function<void()>& body) {
    if (stage_ready(ctx.out, stage, hash)) return;
    body();
    mark_stage(ctx.out, stage, hash);
}

void stage_corpus(StageContext& ctx) {
    ctx.synth_hash =
        combine_hash(ctx.cfg.canonical_subset({"seed", "corpus.", "synth."}), {});
    run_stage(ctx, "corpus", ctx.synth_hash, [&] { synth_corpus(ctx.cfg, ctx.out / "corpus"); });
    for (int v = 0; v < ctx.cfg.corpus.videos; ++v) {
        const fs::path truth = ctx.out / "corpus" / video_dir_name(v) / "truth.json";
        if (!fs::exists(truth))
            throw IoError(IoCode::OpenFailed, "corpus ground truth missing: " + truth.string());
    }
}

void stage_flow(StageContext& ctx) {
    ctx.flow_hash = combine_hash(ctx.cfg.canonical_subset({"flow."}), {ctx.synth_hash});
    run_stage(ctx, "flow", ctx.flow_hash, [&] {
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const fs::path frames_dir = ctx.out / "corpus" / video_dir_name(v) / "frames";
            const auto files = list_frame_files(frames_dir);
            std::vector<FrameImage> frames;
            frames.reserve(files.size());
            for (const auto& f : files) frames.push_back(load_frame(f));
            const auto fields = estimate_flow_sequence(frames, ctx.cfg.flow, 1);
            const fs::path fdir = ctx.out / "flow" / video_dir_name(v);
            fs::create_directories(fdir);
            for (size_t i = 0; i < fields.size(); ++i)
                store_flow(fields[i], fdir / flow_file_name(static_cast<int>(i)));
        });
    });
}

void stage_motion(StageContext& ctx) {
    ctx.motion_hash = combine_hash(ctx.cfg.canonical_subset({"motion."}), {ctx.flow_hash});
    run_stage(ctx, "motion", ctx.motion_hash, [&] {
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const fs::path fdir = ctx.out / "flow" / video_dir_name(v);
            std::vector<double> measures;
            for (int i = 0;; ++i) {
                const fs::path f = fdir / flow_file_name(i);
                if (!fs::exists(f)) break;
                measures.push_back(direction_measure(load_flow(f), ctx.cfg.motion));
            }
            const auto filtered = median_filter(measures, ctx.cfg.motion.median_width);
            const fs::path mdir = ctx.out / "motion" / video_dir_name(v);
            fs::create_directories(mdir);
            SignalSeries signal;
            for (size_t i = 0; i < filtered.size(); ++i) {
                signal.indices.push_back(static_cast<int64_t>(i));
                signal.values.push_back(filtered[i]);
            }
            store_signal(signal, mdir / "signal.csv");
            const auto cumulative = cumulative_signal(filtered);
            SignalSeries cumsum;
            for (size_t i = 0; i < cumulative.size(); ++i) {
                cumsum.indices.push_back(static_cast<int64_t>(i));
                cumsum.values.push_back(cumulative[i]);
            }
            store_signal(cumsum, mdir / "cumsum.csv");
        });
    });
}

void stage_labels(StageContext& ctx) {
    ctx.labels_hash = combine_hash("labels", {ctx.motion_hash});
    run_stage(ctx, "labels", ctx.labels_hash, [&] {
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const fs::path mdir = ctx.out / "motion" / video_dir_name(v);
            const auto cumulative = read_signal_values(mdir / "cumsum.csv");
            const int64_t boundary = boundary_estimate(cumulative);
            const int64_t total = static_cast<int64_t>(cumulative.size());  // pairs + 1 = frames
            const auto labels = weak_labels(total, boundary);
            const fs::path ldir = ctx.out / "labels" / video_dir_name(v);
            fs::create_directories(ldir);
            write_labels_csv(labels, ldir / "labels.csv");
            write_svg_plot(mdir / "cumsum.svg", cumulative,
                           "cumulative motion direction, " + video_dir_name(v),
                           static_cast<long>(boundary));
        });
    });
    // the motion-only method reads its transitions straight off the cumulative
    const std::string detect_hash = combine_hash(ctx.cfg.canonical_subset({"fps"}), {ctx.labels_hash});
    run_stage(ctx, "detect_motion", detect_hash, [&] {
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const auto cumulative =
                read_signal_values(ctx.out / "motion" / video_dir_name(v) / "cumsum.csv");
            const int64_t boundary = boundary_estimate(cumulative);
            TransitionResult r;
            r.frame = boundary;
            r.seconds = static_cast<double>(boundary) / ctx.cfg.fps;
            r.score = cumulative[static_cast<size_t>(boundary)];
            const fs::path ddir = ctx.out / "detect" / kMethodMotion / video_dir_name(v);
            fs::create_directories(ddir);
            write_transition_json(r, ddir / "transition.json");
        });
    });
}

void stage_features(StageContext& ctx) {
    ctx.features_hash = combine_hash("features", {ctx.synth_hash});
    run_stage(ctx, "features", ctx.features_hash, [&] {
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const fs::path frames_dir = ctx.out / "corpus" / video_dir_name(v) / "frames";
            const auto files = list_frame_files(frames_dir);
            std::vector<std::vector<double>> rows;
            rows.reserve(files.size());
            FrameImage prev;
            for (size_t t = 0; t < files.size(); ++t) {
                const FrameImage frame = load_frame(files[t]);
                rows.push_back(feature_to_row(
                    extract_features(frame, t > 0 ? &prev : nullptr)));
                prev = frame;
            }
            const fs::path fdir = ctx.out / "features" / video_dir_name(v);
            fs::create_directories(fdir);
            store_tensor(tensor_from_matrix(rows), fdir / "feats.ptns");
        });
    });
}

void stage_frameclf(StageContext& ctx) {
    ctx.frameclf_hash = combine_hash(ctx.cfg.canonical_subset({"frameclf.", "seed"}),
                                     {ctx.features_hash, ctx.labels_hash});
    run_stage(ctx, "frameclf", ctx.frameclf_hash, [&] {
        std::vector<std::vector<double>> pooled;
        std::vector<int> pooled_labels;
        for (int v = 0; v < ctx.cfg.corpus.videos; ++v) {
            auto rows = read_matrix(ctx.out / "features" / video_dir_name(v) / "feats.ptns");
            auto labels = weak_labels_as_classes(
                read_labels_csv(ctx.out / "labels" / video_dir_name(v) / "labels.csv"));
            if (rows.size() != labels.size())
                throw IoError(IoCode::SizeMismatch, "frameclf: features/labels length mismatch");
            for (auto& r : rows) pooled.push_back(std::move(r));
            pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
        }
        const Normalizer norm = fit_normalizer(pooled);
        const auto normalized = apply_normalizer(norm, pooled);
        MlpModel net = init_mlp<float>({kFeatureDim, ctx.cfg.mlp_hidden, 2},
                                       derive_seed(ctx.cfg.seed, 101));
        TrainConfig tc = ctx.cfg.frameclf;
        tc.seed = derive_seed(ctx.cfg.seed, 102);
        train_mlp(net, normalized, pooled_labels, tc);
        save_mlp(net, &norm, ctx.out / "models" / "frameclf");
    });
}

void stage_embed(StageContext& ctx) {
    ctx.embed_hash = combine_hash("embed", {ctx.frameclf_hash});
    run_stage(ctx, "embed", ctx.embed_hash, [&] {
        Normalizer norm;
        const MlpModel net = load_mlp(ctx.out / "models" / "frameclf", &norm);
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const auto rows = read_matrix(ctx.out / "features" / video_dir_name(v) / "feats.ptns");
            std::vector<std::vector<double>> emb;
            emb.reserve(rows.size());
            for (const auto& row : rows) emb.push_back(embed(net, apply_normalizer(norm, row)));
            const fs::path edir = ctx.out / "emb" / video_dir_name(v);
            fs::create_directories(edir);
            store_tensor(tensor_from_matrix(emb), edir / "emb.ptns");
        });
    });
}

// Per-frame input rows fed to the temporal model for one method.
std::string inputs_hash(const StageContext& ctx, const std::string& method) {
    if (method == kMethodTcnMotion) return combine_hash("inputs_" + method, {ctx.motion_hash});
    if (method == kMethodTcnFeatures) return combine_hash("inputs_" + method, {ctx.features_hash});
    if (method == kMethodTcnEmbeddings) return combine_hash("inputs_" + method, {ctx.embed_hash});
    if (method == kMethodTcnCombined)
        return combine_hash("inputs_" + method, {ctx.embed_hash, ctx.motion_hash});
    throw std::invalid_argument("unknown method: " + method);
}

// The pair measure at index t describes frames (t, t+1); the last frame
// repeats the final pair so the series is frame-aligned.
std::vector<double> frame_aligned_signal(const std::vector<double>& pair_values) {
    std::vector<double> out;
    out.reserve(pair_values.size() + 1);
    out = pair_values;
    out.push_back(pair_values.empty() ? 0.0 : pair_values.back());
    return out;
}

void stage_inputs(StageContext& ctx, const std::string& method) {
    const std::string hash = inputs_hash(ctx, method);
    run_stage(ctx, "inputs_" + method, hash, [&] {
        const fs::path base = ctx.out / "inputs" / method;
        fs::create_directories(base);

        Normalizer signal_norm;
        const bool wants_signal = method == kMethodTcnMotion || method == kMethodTcnCombined;
        if (wants_signal) {
            std::vector<std::vector<double>> pooled;
            for (int v = 0; v < ctx.cfg.corpus.videos; ++v)
                for (double d :
                     read_signal_values(ctx.out / "motion" / video_dir_name(v) / "signal.csv"))
                    pooled.push_back({d});
            signal_norm = fit_normalizer(pooled);
            store_tensor(normalizer_to_tensor(signal_norm), base / "norm.ptns");
        }
        Normalizer feature_norm;
        if (method == kMethodTcnFeatures) {
            std::vector<std::vector<double>> pooled;
            for (int v = 0; v < ctx.cfg.corpus.videos; ++v)
                for (auto& row :
                     read_matrix(ctx.out / "features" / video_dir_name(v) / "feats.ptns"))
                    pooled.push_back(std::move(row));
            feature_norm = fit_normalizer(pooled);
            store_tensor(normalizer_to_tensor(feature_norm), base / "norm.ptns");
        }

        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            std::vector<std::vector<double>> rows;
            if (method == kMethodTcnMotion || method == kMethodTcnCombined) {
                const auto signal = frame_aligned_signal(
                    read_signal_values(ctx.out / "motion" / video_dir_name(v) / "signal.csv"));
                if (method == kMethodTcnMotion) {
                    for (double d : signal) rows.push_back(apply_normalizer(signal_norm, std::vector<double>{d}));
                } else {
                    rows = read_matrix(ctx.out / "emb" / video_dir_name(v) / "emb.ptns");
                    if (rows.size() != signal.size())
                        throw IoError(IoCode::SizeMismatch, "combined inputs: length mismatch");
                    for (size_t t = 0; t < rows.size(); ++t)
                        rows[t].push_back(apply_normalizer(signal_norm, std::vector<double>{signal[t]})[0]);
                }
            } else if (method == kMethodTcnFeatures) {
                rows = apply_normalizer(
                    feature_norm,
                    read_matrix(ctx.out / "features" / video_dir_name(v) / "feats.ptns"));
            } else {
                rows = read_matrix(ctx.out / "emb" / video_dir_name(v) / "emb.ptns");
            }
            const fs::path vdir = base / video_dir_name(v);
            fs::create_directories(vdir);
            store_tensor(tensor_from_matrix(rows), vdir / "input.ptns");
        });
    });
}

void stage_train_tcn(StageContext& ctx, const std::string& method) {
    const std::string hash = combine_hash(ctx.cfg.canonical_subset({"tcn.", "seed"}),
                                          {inputs_hash(ctx, method), ctx.labels_hash});
    run_stage(ctx, "train_" + method, hash, [&] {
        std::vector<std::vector<std::vector<double>>> videos;
        std::vector<std::vector<int>> labels;
        for (int v = 0; v < ctx.cfg.corpus.videos; ++v) {
            videos.push_back(
                read_matrix(ctx.out / "inputs" / method / video_dir_name(v) / "input.ptns"));
            labels.push_back(weak_labels_as_classes(
                read_labels_csv(ctx.out / "labels" / video_dir_name(v) / "labels.csv")));
        }
        const int input_dim = static_cast<int>(videos.front().front().size());
        TcnConfig tc = ctx.cfg.tcn;
        tc.seed = derive_seed(ctx.cfg.seed, fnv1a64(method));
        MsTcnModel net = init_tcn(tc, input_dim, tc.seed);
        train_tcn(net, videos, labels, tc);
        save_tcn(net, ctx.out / "models" / ("tcn_model_" + method));
    });
}

void stage_infer_detect(StageContext& ctx, const std::string& method) {
    const std::string train_hash = combine_hash(ctx.cfg.canonical_subset({"tcn.", "seed"}),
                                                {inputs_hash(ctx, method), ctx.labels_hash});
    const std::string infer_hash = combine_hash("infer", {train_hash});
    run_stage(ctx, "infer_" + method, infer_hash, [&] {
        const MsTcnModel net = load_tcn(ctx.out / "models" / ("tcn_model_" + method));
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const auto rows =
                read_matrix(ctx.out / "inputs" / method / video_dir_name(v) / "input.ptns");
            const TcnOutput out = tcn_forward(net, rows);
            const auto& final_probs = out.stage_probs.back();
            std::vector<std::vector<double>> mat(out.frames, std::vector<double>(out.classes));
            for (int t = 0; t < out.frames; ++t)
                for (int c = 0; c < out.classes; ++c)
                    mat[t][c] = final_probs[static_cast<size_t>(t) * out.classes + c];
            const fs::path pdir = ctx.out / "probs" / method / video_dir_name(v);
            fs::create_directories(pdir);
            store_tensor(tensor_from_matrix(mat), pdir / "probs.ptns");
        });
    });
    const std::string detect_hash =
        combine_hash("detect" + ctx.cfg.canonical_subset({"fps"}), {infer_hash});
    run_stage(ctx, "detect_" + method, detect_hash, [&] {
        parallel_for(ctx.cfg.corpus.videos, ctx.threads, [&](int v) {
            const auto mat =
                read_matrix(ctx.out / "probs" / method / video_dir_name(v) / "probs.ptns");
            PhaseProbabilitySeries series;
            series.fps = ctx.cfg.fps;
            series.p.reserve(mat.size());
            for (const auto& row : mat) series.p.push_back({row[0], row[1]});
            const TransitionResult r = detect_transition(series);
            const fs::path ddir = ctx.out / "detect" / method / video_dir_name(v);
            fs::create_directories(ddir);
            write_transition_json(r, ddir / "transition.json");
        });
    });
}

MethodReport build_method_report(const StageContext& ctx, const std::string& method) {
    MethodReport report;
    report.method = method;
    const double frames_per_minute = ctx.cfg.fps * 60.0;
    for (int v = 0; v < ctx.cfg.corpus.videos; ++v) {
        const auto r =
            read_transition_json(ctx.out / "detect" / method / video_dir_name(v) / "transition.json");
        const int64_t gt =
            read_truth_transition(ctx.out / "corpus" / video_dir_name(v) / "truth.json");
        report.predicted_frames.push_back(r.frame);
        report.annotated_frames.push_back(gt);
        report.predicted_minutes.push_back(static_cast<double>(r.frame) / frames_per_minute);
        report.annotated_minutes.push_back(static_cast<double>(gt) / frames_per_minute);
        report.abs_error_minutes.push_back(
            std::abs(report.predicted_minutes.back() - report.annotated_minutes.back()));
    }
    report.stats = mae_medae(report.predicted_minutes, report.annotated_minutes);
    return report;
}

}  // namespace

EvalReport run_methods(const PipelineConfig& cfg, const fs::path& out_dir,
                       const std::vector<std::string>& methods) {
    cfg.validate();
    StageContext ctx{cfg, out_dir, resolve_threads(cfg.threads), {}, {}, {}, {}, {}, {}, {}};
    fs::create_directories(out_dir);

    stage_corpus(ctx);
    stage_flow(ctx);
    stage_motion(ctx);
    stage_labels(ctx);

    const bool needs_appearance =
        std::any_of(methods.begin(), methods.end(), [](const std::string& m) {
            return m == kMethodTcnFeatures || m == kMethodTcnEmbeddings || m == kMethodTcnCombined;
        });
    stage_features(ctx);
    if (needs_appearance) {
        stage_frameclf(ctx);
        stage_embed(ctx);
    }
    for (const auto& method : methods) {
        if (method == kMethodMotion) continue;  // handled by stage_labels
        stage_inputs(ctx, method);
        stage_train_tcn(ctx, method);
        stage_infer_detect(ctx, method);
    }

    EvalReport report;
    report.config_hash = hash_hex(fnv1a64(cfg.canonical()));
    report.seed = cfg.seed;
    report.fps = cfg.fps;
    for (const auto& method : methods) report.methods.push_back(build_method_report(ctx, method));

    write_report_csv(report, out_dir / "report.csv");
    write_report_json(report, out_dir / "report.json");
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& m : report.methods) bars.emplace_back(m.method, m.stats.mae);
    write_svg_bars(out_dir / "report.svg", bars, "transition MAE by method, minutes");
    return report;
}

EvalReport run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir) {
    return run_methods(cfg, out_dir, {kMethodTcnEmbeddings});
}

EvalReport run_ablation(const PipelineConfig& cfg, const fs::path& out_dir) {
    return run_methods(cfg, out_dir, all_methods());
}

void write_report_csv(const EvalReport& report, const fs::path& path) {
    std::string buf;
    buf += "# transition evaluation report\n";
    buf += "# config_hash=" + report.config_hash + " seed=" + std::to_string(report.seed) + "\n";
    buf +=
        "# note: tcn_features feeds raw normalized frame descriptors (generic-feature baseline); "
        "tcn_embeddings feeds classifier penultimate activations\n";
    buf += "method,video,pred_frame,gt_frame,pred_min,gt_min,abs_err_min\n";
    char tmp[200];
    for (const auto& m : report.methods) {
        for (size_t v = 0; v < m.predicted_frames.size(); ++v) {
            std::snprintf(tmp, sizeof(tmp), "%s,%03zu,%lld,%lld,%.9g,%.9g,%.9g\n", m.method.c_str(),
                          v, static_cast<long long>(m.predicted_frames[v]),
                          static_cast<long long>(m.annotated_frames[v]), m.predicted_minutes[v],
                          m.annotated_minutes[v], m.abs_error_minutes[v]);
            buf += tmp;
        }
    }
    buf += "method,mae_min,medae_min\n";
    for (const auto& m : report.methods) {
        std::snprintf(tmp, sizeof(tmp), "%s,%.9g,%.9g\n", m.method.c_str(), m.stats.mae,
                      m.stats.medae);
        buf += tmp;
    }
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << buf;
    if (!out) throw IoError(IoCode::WriteFailed, "cannot write " + path.string());
}

void write_report_json(const EvalReport& report, const fs::path& path) {
    json j;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["fps"] = report.fps;
    j["note"] =
        "tcn_features feeds raw normalized frame descriptors (generic-feature baseline); "
        "tcn_embeddings feeds classifier penultimate activations";
    j["methods"] = json::array();
    for (const auto& m : report.methods) {
        json mj;
        mj["method"] = m.method;
        mj["mae_min"] = m.stats.mae;
        mj["medae_min"] = m.stats.medae;
        mj["videos"] = json::array();
        for (size_t v = 0; v < m.predicted_frames.size(); ++v) {
            json vj;
            vj["video"] = video_dir_name(static_cast<int>(v));
            vj["pred_frame"] = m.predicted_frames[v];
            vj["gt_frame"] = m.annotated_frames[v];
            vj["pred_min"] = m.predicted_minutes[v];
            vj["gt_min"] = m.annotated_minutes[v];
            vj["abs_err_min"] = m.abs_error_minutes[v];
            mj["videos"].push_back(vj);
        }
        j["methods"].push_back(mj);
    }
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw IoError(IoCode::WriteFailed, "cannot write " + path.string());
}

}  // namespace phaseparse
