#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phaseparse/config.hpp"
#include "phaseparse/metrics.hpp"

namespace phaseparse {

/// A stage found on disk whose recorded config hash no longer matches.
class StaleArtifactError : public std::runtime_error {
public:
    explicit StaleArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr const char* kMethodMotion = "motion";
inline constexpr const char* kMethodTcnMotion = "tcn_motion";
inline constexpr const char* kMethodTcnFeatures = "tcn_features";
inline constexpr const char* kMethodTcnEmbeddings = "tcn_embeddings";
inline constexpr const char* kMethodTcnCombined = "tcn_combined";

/// The five evaluated methods, ablation order.
std::vector<std::string> all_methods();

struct MethodReport {
    std::string method;
    std::vector<int64_t> predicted_frames;
    std::vector<int64_t> annotated_frames;
    std::vector<double> predicted_minutes;
    std::vector<double> annotated_minutes;
    std::vector<double> abs_error_minutes;
    ErrorStats stats;
};

struct EvalReport {
    std::string config_hash;
    uint64_t seed = 0;
    double fps = 30.0;
    std::vector<MethodReport> methods;
};

std::string video_dir_name(int index);

/// Generates the synthetic corpus: one video_NNN directory per video with
/// frames, truth.csv, truth.json, optionally the generating flow fields.
void synth_corpus(const PipelineConfig& cfg, const std::filesystem::path& corpus_dir);

/// Runs the full chain (corpus -> flow -> motion -> weak labels -> features
/// -> classifier -> embeddings -> temporal model -> transitions -> report)
/// for the named methods, skipping stages already on disk with matching
/// hashes. Writes report.csv / report.json under out_dir.
EvalReport run_methods(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                       const std::vector<std::string>& methods);

/// Single-method end-to-end run (the embedding-based method).
EvalReport run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

/// All five methods; the Table-style comparison harness.
EvalReport run_ablation(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
void write_report_json(const EvalReport& report, const std::filesystem::path& path);

// Small per-video artifacts used across stages.
void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path);
void write_truth_json(const GroundTruth& truth, const std::filesystem::path& path);
int64_t read_truth_transition(const std::filesystem::path& json_path);
void write_labels_csv(const std::vector<int>& labels, const std::filesystem::path& path);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

}  // namespace phaseparse
