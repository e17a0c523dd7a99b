#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phaseparse/config.hpp"
#include "phaseparse/features.hpp"
#include "phaseparse/flow.hpp"
#include "phaseparse/metrics.hpp"
#include "phaseparse/mlp.hpp"
#include "phaseparse/motion.hpp"
#include "phaseparse/pipeline.hpp"
#include "phaseparse/svg.hpp"
#include "phaseparse/synth.hpp"
#include "phaseparse/tcn.hpp"
#include "phaseparse/transition.hpp"

namespace fs = std::filesystem;
using namespace phaseparse;

namespace {

struct GlobalArgs {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool threads_set = false;

    PipelineConfig load() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = PipelineConfig::from_file(config_path);
        if (seed_set) cfg.seed = seed;
        if (threads_set) cfg.threads = threads;
        cfg.validate();
        return cfg;
    }
};

std::vector<fs::path> video_subdirs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// Accepts either one video directory (file directly inside) or a corpus
// directory of per-video subdirectories.
std::vector<fs::path> find_per_video_files(const fs::path& dir, const std::string& filename) {
    if (fs::exists(dir / filename)) return {dir / filename};
    std::vector<fs::path> out;
    for (const auto& sub : video_subdirs(dir))
        if (fs::exists(sub / filename)) out.push_back(sub / filename);
    if (out.empty())
        throw std::invalid_argument("no " + filename + " found under " + dir.string());
    return out;
}

std::vector<int> phase_labels_to_classes(const std::vector<int>& labels) {
    std::vector<int> out(labels.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = labels[i] - 1;
    return out;
}

int cmd_synth(const GlobalArgs& g, const std::string& out) {
    synth_corpus(g.load(), out);
    return 0;
}

int cmd_flow(const GlobalArgs& g, const std::string& frames_dir, const std::string& out,
             int levels, int patch, int stride) {
    PipelineConfig cfg = g.load();
    if (levels > 0) cfg.flow.levels = levels;
    if (patch > 0) cfg.flow.patch_size = patch;
    if (stride > 0) cfg.flow.stride = stride;
    cfg.flow.validate();
    const auto files = list_frame_files(frames_dir);
    if (files.size() < 2) throw std::invalid_argument("flow: need at least two frames");
    std::vector<FrameImage> frames;
    frames.reserve(files.size());
    for (const auto& f : files) frames.push_back(load_frame(f));
    const auto fields = estimate_flow_sequence(frames, cfg.flow, cfg.threads);
    fs::create_directories(out);
    char name[32];
    for (size_t i = 0; i < fields.size(); ++i) {
        std::snprintf(name, sizeof(name), "flow_%06zu.flo", i);
        store_flow(fields[i], fs::path(out) / name);
    }
    std::printf("wrote %zu flow fields to %s\n", fields.size(), out.c_str());
    return 0;
}

int cmd_motion(const GlobalArgs& g, const std::string& flow_dir, const std::string& out) {
    const PipelineConfig cfg = g.load();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(flow_dir))
        if (e.path().extension() == ".flo") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::invalid_argument("motion: no .flo files under " + flow_dir);
    SignalSeries signal;
    std::vector<double> measures;
    for (const auto& f : files) measures.push_back(direction_measure(load_flow(f), cfg.motion));
    const auto filtered = median_filter(measures, cfg.motion.median_width);
    for (size_t i = 0; i < filtered.size(); ++i) {
        signal.indices.push_back(static_cast<int64_t>(i));
        signal.values.push_back(filtered[i]);
    }
    store_signal(signal, out);
    std::printf("wrote %zu pair measures to %s\n", filtered.size(), out.c_str());
    return 0;
}

int cmd_segment(const std::string& signal_path, int64_t frames, const std::string& labels_out,
                const std::string& cumsum_out, const std::string& plot_out) {
    const auto signal = load_signal(signal_path);
    if (frames != static_cast<int64_t>(signal.values.size()) + 1)
        throw std::invalid_argument("segment: --frames must equal pair count + 1");
    const auto cumulative = cumulative_signal(signal.values);
    const int64_t boundary = boundary_estimate(cumulative);
    write_labels_csv(weak_labels(frames, boundary), labels_out);
    if (!cumsum_out.empty()) {
        SignalSeries cs;
        for (size_t i = 0; i < cumulative.size(); ++i) {
            cs.indices.push_back(static_cast<int64_t>(i));
            cs.values.push_back(cumulative[i]);
        }
        store_signal(cs, cumsum_out);
    }
    if (!plot_out.empty())
        write_svg_plot(plot_out, cumulative, "cumulative motion direction",
                       static_cast<long>(boundary));
    std::printf("boundary estimate: frame %lld of %lld\n", static_cast<long long>(boundary),
                static_cast<long long>(frames));
    return 0;
}

int cmd_featurize(const std::string& frames_dir, const std::string& out,
                  const std::string& normalizer_path) {
    const auto files = list_frame_files(frames_dir);
    if (files.empty()) throw std::invalid_argument("featurize: no frames under " + frames_dir);
    std::vector<std::vector<double>> rows;
    FrameImage prev;
    for (size_t t = 0; t < files.size(); ++t) {
        const FrameImage frame = load_frame(files[t]);
        rows.push_back(feature_to_row(extract_features(frame, t > 0 ? &prev : nullptr)));
        prev = frame;
    }
    if (!normalizer_path.empty()) {
        const Normalizer norm = normalizer_from_tensor(load_tensor(normalizer_path));
        rows = apply_normalizer(norm, rows);
    }
    store_tensor(tensor_from_matrix(rows), out);
    std::printf("wrote %zu feature rows to %s\n", rows.size(), out.c_str());
    return 0;
}

int cmd_train_frame(const GlobalArgs& g, const std::string& feats_dir,
                    const std::string& labels_dir, const std::string& out) {
    const PipelineConfig cfg = g.load();
    const auto feat_files = find_per_video_files(feats_dir, "feats.ptns");
    std::vector<std::vector<double>> pooled;
    std::vector<int> pooled_labels;
    for (const auto& ff : feat_files) {
        auto rows = matrix_from_tensor(load_tensor(ff));
        const fs::path label_file =
            fs::path(labels_dir) / fs::relative(ff.parent_path(), feats_dir) / "labels.csv";
        auto labels = phase_labels_to_classes(read_labels_csv(label_file));
        if (rows.size() != labels.size())
            throw std::invalid_argument("train-frame: features/labels length mismatch for " +
                                        ff.string());
        for (auto& r : rows) pooled.push_back(std::move(r));
        pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
    }
    const Normalizer norm = fit_normalizer(pooled);
    const auto normalized = apply_normalizer(norm, pooled);
    MlpModel net = init_mlp<float>({static_cast<int>(pooled.front().size()), cfg.mlp_hidden, 2},
                                   derive_seed(cfg.seed, 101));
    TrainConfig tc = cfg.frameclf;
    tc.seed = derive_seed(cfg.seed, 102);
    const TrainStats stats = train_mlp(net, normalized, pooled_labels, tc);
    save_mlp(net, &norm, out);
    std::printf("trained on %zu frames: loss %.4f, label accuracy %.4f\n", pooled.size(),
                stats.final_loss, stats.label_accuracy);
    return 0;
}

int cmd_embed(const std::string& model_dir, const std::string& feats_path,
              const std::string& out) {
    Normalizer norm;
    const MlpModel net = load_mlp(model_dir, &norm);
    const auto rows = matrix_from_tensor(load_tensor(feats_path));
    std::vector<std::vector<double>> emb;
    emb.reserve(rows.size());
    for (const auto& row : rows)
        emb.push_back(embed(net, norm.dim() > 0 ? apply_normalizer(norm, row) : row));
    store_tensor(tensor_from_matrix(emb), out);
    std::printf("wrote %zu embeddings of dim %zu to %s\n", emb.size(),
                emb.empty() ? 0 : emb.front().size(), out.c_str());
    return 0;
}

int cmd_train_tcn(const GlobalArgs& g, const std::string& emb_dir, const std::string& labels_dir,
                  const std::string& out, int stages, int layers) {
    PipelineConfig cfg = g.load();
    if (stages > 0) cfg.tcn.stages = stages;
    if (layers > 0) cfg.tcn.layers = layers;
    const std::string emb_name = fs::exists(fs::path(emb_dir) / "emb.ptns") ||
                                         !fs::exists(fs::path(emb_dir) / "input.ptns")
                                     ? "emb.ptns"
                                     : "input.ptns";
    const auto emb_files = find_per_video_files(emb_dir, emb_name);
    std::vector<std::vector<std::vector<double>>> videos;
    std::vector<std::vector<int>> labels;
    for (const auto& ef : emb_files) {
        videos.push_back(matrix_from_tensor(load_tensor(ef)));
        const fs::path label_file =
            fs::path(labels_dir) / fs::relative(ef.parent_path(), emb_dir) / "labels.csv";
        labels.push_back(phase_labels_to_classes(read_labels_csv(label_file)));
    }
    TcnConfig tc = cfg.tcn;
    tc.seed = derive_seed(cfg.seed, 301);
    MsTcnModel net = init_tcn(tc, static_cast<int>(videos.front().front().size()), tc.seed);
    const auto stats = train_tcn(net, videos, labels, tc);
    save_tcn(net, out);
    std::printf("trained %d stages x %d layers on %zu videos, final epoch loss %.4f\n", tc.stages,
                tc.layers, videos.size(), stats.epoch_loss.back());
    return 0;
}

int cmd_infer(const std::string& model_dir, const std::string& emb_path, const std::string& out) {
    const MsTcnModel net = load_tcn(model_dir);
    const auto rows = matrix_from_tensor(load_tensor(emb_path));
    const TcnOutput result = tcn_forward(net, rows);
    const auto& final_probs = result.stage_probs.back();
    std::vector<std::vector<double>> mat(result.frames, std::vector<double>(result.classes));
    for (int t = 0; t < result.frames; ++t)
        for (int c = 0; c < result.classes; ++c)
            mat[t][c] = final_probs[static_cast<size_t>(t) * result.classes + c];
    store_tensor(tensor_from_matrix(mat), out);
    std::printf("wrote %d x %d probabilities to %s\n", result.frames, result.classes, out.c_str());
    return 0;
}

int cmd_detect(const std::string& probs_path, double fps, const std::string& out) {
    const auto mat = matrix_from_tensor(load_tensor(probs_path));
    PhaseProbabilitySeries series;
    series.fps = fps;
    for (const auto& row : mat) {
        if (row.size() != 2) throw std::invalid_argument("detect: probabilities must be T x 2");
        series.p.push_back({row[0], row[1]});
    }
    const TransitionResult r = detect_transition(series);
    nlohmann::json j;
    j["transition_frame"] = r.frame;
    j["transition_seconds"] = r.seconds;
    j["score"] = r.score;
    std::ofstream o(out, std::ios::trunc);
    o << j.dump(2) << '\n';
    std::printf("transition at frame %lld (%.3f s, score %.6g)\n", static_cast<long long>(r.frame),
                r.seconds, r.score);
    return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& truth_dir, double fps,
             const std::string& method, const std::string& out_csv, const std::string& out_json) {
    EvalReport report;
    report.config_hash = "-";
    report.fps = fps;
    MethodReport m;
    m.method = method;
    const auto preds = find_per_video_files(pred_dir, "transition.json");
    const double frames_per_minute = fps * 60.0;
    for (const auto& pf : preds) {
        std::ifstream in(pf);
        nlohmann::json j;
        in >> j;
        const int64_t pred = j.at("transition_frame").get<int64_t>();
        const fs::path truth_file =
            fs::path(truth_dir) / fs::relative(pf.parent_path(), pred_dir) / "truth.json";
        const int64_t gt = read_truth_transition(truth_file);
        m.predicted_frames.push_back(pred);
        m.annotated_frames.push_back(gt);
        m.predicted_minutes.push_back(static_cast<double>(pred) / frames_per_minute);
        m.annotated_minutes.push_back(static_cast<double>(gt) / frames_per_minute);
        m.abs_error_minutes.push_back(
            std::abs(m.predicted_minutes.back() - m.annotated_minutes.back()));
    }
    m.stats = mae_medae(m.predicted_minutes, m.annotated_minutes);
    report.methods.push_back(std::move(m));
    if (!out_csv.empty()) write_report_csv(report, out_csv);
    if (!out_json.empty()) write_report_json(report, out_json);
    std::printf("%s: MAE %.6g min, MedAE %.6g min over %zu videos\n", method.c_str(),
                report.methods[0].stats.mae, report.methods[0].stats.medae,
                report.methods[0].predicted_frames.size());
    return 0;
}

int cmd_ablate(const GlobalArgs& g, const std::string& out) {
    const EvalReport report = run_ablation(g.load(), out);
    std::printf("method,mae_min,medae_min\n");
    for (const auto& m : report.methods)
        std::printf("%s,%.6g,%.6g\n", m.method.c_str(), m.stats.mae, m.stats.medae);
    return 0;
}

int cmd_pipeline(const GlobalArgs& g, const std::string& out) {
    const EvalReport report = run_pipeline(g.load(), out);
    for (const auto& m : report.methods)
        std::printf("%s: MAE %.6g min, MedAE %.6g min\n", m.method.c_str(), m.stats.mae,
                    m.stats.medae);
    return 0;
}

void fail(const std::string& kind, const std::string& message) {
    nlohmann::json j;
    j["error"] = kind;
    j["message"] = message;
    std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-phase video parsing: motion-derived weak labels, appearance models, "
                 "transition detection"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    auto* seed_opt = app.add_option("--seed", g.seed, "override the config seed");
    auto* threads_opt = app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
    app.add_option("--config", g.config_path, "key = value configuration file");

    std::string out, frames_dir, flow_dir, signal_path, labels_out, cumsum_out, plot_out;
    std::string normalizer_path, feats, labels_dir, model_dir, emb, probs, pred_dir, truth_dir;
    std::string method = "custom";
    int64_t frames = 0;
    double fps = 30.0;
    int stages = 0, layers = 0;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--out", out, "corpus directory")->required();

    auto* flow = app.add_subcommand("flow", "dense optical flow over a frame directory");
    flow->add_option("--frames", frames_dir)->required();
    flow->add_option("--out", out)->required();
    int flow_levels = 0, flow_patch = 0, flow_stride = 0;
    flow->add_option("--levels", flow_levels);
    flow->add_option("--patch", flow_patch);
    flow->add_option("--stride", flow_stride);

    auto* motion = app.add_subcommand("motion", "per-pair motion direction measures");
    motion->add_option("--flow", flow_dir)->required();
    motion->add_option("--out", out)->required();

    auto* segment = app.add_subcommand("segment", "cumulative signal, boundary and weak labels");
    segment->add_option("--signal", signal_path)->required();
    segment->add_option("--frames", frames)->required();
    segment->add_option("--out", labels_out)->required();
    segment->add_option("--cumsum", cumsum_out);
    segment->add_option("--plot", plot_out, "write an SVG of the cumulative signal");

    auto* featurize = app.add_subcommand("featurize", "per-frame appearance descriptors");
    featurize->add_option("--frames", frames_dir)->required();
    featurize->add_option("--out", out)->required();
    featurize->add_option("--normalizer", normalizer_path);

    auto* train_frame = app.add_subcommand("train-frame", "train the frame phase classifier");
    train_frame->add_option("--feats", feats)->required();
    train_frame->add_option("--labels", labels_dir)->required();
    train_frame->add_option("--out", out)->required();

    auto* embed_cmd = app.add_subcommand("embed", "penultimate-layer frame embeddings");
    embed_cmd->add_option("--model", model_dir)->required();
    embed_cmd->add_option("--feats", feats)->required();
    embed_cmd->add_option("--out", out)->required();

    auto* train_tcn_cmd = app.add_subcommand("train-tcn", "train the temporal refinement model");
    train_tcn_cmd->add_option("--emb", emb)->required();
    train_tcn_cmd->add_option("--labels", labels_dir)->required();
    train_tcn_cmd->add_option("--out", out)->required();
    train_tcn_cmd->add_option("--stages", stages);
    train_tcn_cmd->add_option("--layers", layers);

    auto* infer = app.add_subcommand("infer", "per-frame phase probabilities");
    infer->add_option("--model", model_dir)->required();
    infer->add_option("--emb", emb)->required();
    infer->add_option("--out", out)->required();

    auto* detect = app.add_subcommand("detect", "optimal two-phase transition point");
    detect->add_option("--probs", probs)->required();
    detect->add_option("--fps", fps);
    detect->add_option("--out", out)->required();

    auto* eval = app.add_subcommand("eval", "transition error metrics against ground truth");
    eval->add_option("--pred", pred_dir)->required();
    eval->add_option("--truth", truth_dir)->required();
    eval->add_option("--fps", fps);
    eval->add_option("--method", method);
    eval->add_option("--out-csv", out);
    eval->add_option("--out-json", labels_out);

    auto* ablate = app.add_subcommand("ablate", "run every method and compare");
    ablate->add_option("--out", out)->required();

    auto* pipeline = app.add_subcommand("pipeline", "end-to-end run of the embedding method");
    pipeline->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
        g.seed_set = seed_opt->count() > 0;
        g.threads_set = threads_opt->count() > 0;

        if (synth->parsed()) return cmd_synth(g, out);
        if (flow->parsed())
            return cmd_flow(g, frames_dir, out, flow_levels, flow_patch, flow_stride);
        if (motion->parsed()) return cmd_motion(g, flow_dir, out);
        if (segment->parsed())
            return cmd_segment(signal_path, frames, labels_out, cumsum_out, plot_out);
        if (featurize->parsed()) return cmd_featurize(frames_dir, out, normalizer_path);
        if (train_frame->parsed()) return cmd_train_frame(g, feats, labels_dir, out);
        if (embed_cmd->parsed()) return cmd_embed(model_dir, feats, out);
        if (train_tcn_cmd->parsed()) return cmd_train_tcn(g, emb, labels_dir, out, stages, layers);
        if (infer->parsed()) return cmd_infer(model_dir, emb, out);
        if (detect->parsed()) return cmd_detect(probs, fps, out);
        if (eval->parsed()) return cmd_eval(pred_dir, truth_dir, fps, method, out, labels_out);
        if (ablate->parsed()) return cmd_ablate(g, out);
        if (pipeline->parsed()) return cmd_pipeline(g, out);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) fail("usage", e.what());
        return app.exit(e);
    } catch (const StaleArtifactError& e) {
        fail("stale_artifact", e.what());
        return 3;
    } catch (const ConfigError& e) {
        fail("config", e.what());
        return 2;
    } catch (const IoError& e) {
        fail("io", e.what());
        return 2;
    } catch (const std::exception& e) {
        fail("runtime", e.what());
        return 1;
    }
}
