#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phaseparse/flow.hpp"
#include "phaseparse/mlp.hpp"
#include "phaseparse/motion.hpp"
#include "phaseparse/synth.hpp"
#include "phaseparse/tcn.hpp"

namespace phaseparse {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorpusConfig {
    int videos = 50;
    double fraction_min = 0.30;  // per-video transition fraction range
    double fraction_max = 0.55;
    bool emit_flow = false;  // also write the synthetic radial fields as .flo
};

/// Every tunable of the pipeline, loadable from a flat `key = value` file
/// (`#` comments, dotted namespaces). Unknown keys and malformed values are
/// rejected.
struct PipelineConfig {
    uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    double fps = 30.0;

    CorpusConfig corpus;
    SynthConfig synth;
    FlowParams flow;
    MotionParams motion;
    int mlp_hidden = 16;
    TrainConfig frameclf;
    TcnConfig tcn;

    static PipelineConfig from_file(const std::filesystem::path& path);
    void apply_line(const std::string& key, const std::string& value);
    void validate() const;

    /// Sorted `key=value` lines; equal configs canonicalize identically.
    std::string canonical() const;
    /// Canonical lines whose key starts with any of the prefixes.
    std::string canonical_subset(const std::vector<std::string>& prefixes) const;

    /// Per-video generator config: derived seed and sampled transition
    /// fraction, everything else copied.
    SynthConfig video_synth_config(int video_index) const;
};

uint64_t fnv1a64(const std::string& text);
std::string hash_hex(uint64_t h);

}  // namespace phaseparse
