#include "phaseparse/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

namespace phaseparse {

namespace {

struct Entry {
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (errno != 0 || value.empty() || end != value.c_str() + value.size())
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    return v;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || value.empty() || end != value.c_str() + value.size() || value[0] == '-')
        throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" + value + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || value.empty() || end != value.c_str() + value.size())
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// One table describes every key; canonicalization, parsing and hashing all
// walk it, so they cannot drift apart.
std::map<std::string, Entry> schema(PipelineConfig& c) {
    std::map<std::string, Entry> m;
    const auto add_int = [&m](const std::string& key, int* p) {
        m[key] = {[p] { return std::to_string(*p); },
                  [p, key](const std::string& v) { *p = static_cast<int>(parse_int(key, v)); }};
    };
    const auto add_u64 = [&m](const std::string& key, uint64_t* p) {
        m[key] = {[p] { return std::to_string(*p); },
                  [p, key](const std::string& v) { *p = parse_u64(key, v); }};
    };
    const auto add_double = [&m](const std::string& key, double* p) {
        m[key] = {[p] { return fmt_double(*p); },
                  [p, key](const std::string& v) { *p = parse_double(key, v); }};
    };
    const auto add_bool = [&m](const std::string& key, bool* p) {
        m[key] = {[p] { return *p ? std::string("true") : std::string("false"); },
                  [p, key](const std::string& v) { *p = parse_bool(key, v); }};
    };

    add_u64("seed", &c.seed);
    add_int("threads", &c.threads);
    add_double("fps", &c.fps);

    add_int("corpus.videos", &c.corpus.videos);
    add_double("corpus.fraction_min", &c.corpus.fraction_min);
    add_double("corpus.fraction_max", &c.corpus.fraction_max);
    add_bool("corpus.emit_flow", &c.corpus.emit_flow);

    add_int("synth.width", &c.synth.width);
    add_int("synth.height", &c.synth.height);
    add_int("synth.frames", &c.synth.total_frames);
    add_int("synth.dwell_frames", &c.synth.dwell_frames);
    add_double("synth.v1_mean", &c.synth.forward_phase.mean_velocity);
    add_double("synth.v1_jitter", &c.synth.forward_phase.jitter);
    add_double("synth.v1_pause_prob", &c.synth.forward_phase.pause_prob);
    add_double("synth.v1_slip_prob", &c.synth.forward_phase.slip_prob);
    add_double("synth.v2_mean", &c.synth.backward_phase.mean_velocity);
    add_double("synth.v2_jitter", &c.synth.backward_phase.jitter);
    add_double("synth.v2_pause_prob", &c.synth.backward_phase.pause_prob);
    add_double("synth.v2_slip_prob", &c.synth.backward_phase.slip_prob);
    add_double("synth.brightness1", &c.synth.forward_look.brightness);
    add_double("synth.lumen_radius1", &c.synth.forward_look.lumen_radius);
    add_double("synth.texture_scale1", &c.synth.forward_look.texture_scale);
    add_double("synth.wall_prob1", &c.synth.forward_look.wall_contact_prob);
    add_double("synth.brightness2", &c.synth.backward_look.brightness);
    add_double("synth.lumen_radius2", &c.synth.backward_look.lumen_radius);
    add_double("synth.texture_scale2", &c.synth.backward_look.texture_scale);
    add_double("synth.wall_prob2", &c.synth.backward_look.wall_contact_prob);
    add_double("synth.flow_sigma", &c.synth.flow_sigma);
    add_double("synth.outlier_fraction", &c.synth.outlier_fraction);
    add_double("synth.flow_scale", &c.synth.flow_scale);
    add_double("synth.foe_jitter", &c.synth.foe_jitter);

    add_int("flow.levels", &c.flow.levels);
    add_int("flow.patch", &c.flow.patch_size);
    add_int("flow.stride", &c.flow.stride);
    add_int("flow.iterations", &c.flow.iterations);
    add_double("flow.epsilon", &c.flow.epsilon);
    add_double("flow.temperature", &c.flow.temperature);

    add_double("motion.region_fraction", &c.motion.region_fraction);
    add_int("motion.median_width", &c.motion.median_width);

    add_int("frameclf.hidden", &c.mlp_hidden);
    add_double("frameclf.learning_rate", &c.frameclf.learning_rate);
    add_double("frameclf.momentum", &c.frameclf.momentum);
    add_int("frameclf.batch_size", &c.frameclf.batch_size);
    add_int("frameclf.epochs", &c.frameclf.epochs);
    add_int("frameclf.samples_per_class", &c.frameclf.samples_per_class);

    add_int("tcn.stages", &c.tcn.stages);
    add_int("tcn.layers", &c.tcn.layers);
    add_int("tcn.channels", &c.tcn.channels);
    add_int("tcn.kernel", &c.tcn.kernel);
    add_double("tcn.lambda", &c.tcn.smoothing_lambda);
    add_double("tcn.tau", &c.tcn.truncation_tau);
    add_double("tcn.learning_rate", &c.tcn.learning_rate);
    add_int("tcn.epochs", &c.tcn.epochs);
    return m;
}

}  // namespace

void PipelineConfig::apply_line(const std::string& key, const std::string& value) {
    auto m = schema(*this);
    const auto it = m.find(key);
    if (it == m.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second.set(value);
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    PipelineConfig cfg;
    auto m = schema(cfg);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: missing '=' at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = m.find(key);
        if (it == m.end())
            throw ConfigError("config: unknown key '" + key + "' at line " + std::to_string(line_no));
        it->second.set(value);
    }
    cfg.validate();
    return cfg;
}

void PipelineConfig::validate() const {
    if (corpus.videos < 1) throw ConfigError("config: corpus.videos must be >= 1");
    if (!(corpus.fraction_min > 0.0 && corpus.fraction_max < 1.0 &&
          corpus.fraction_min <= corpus.fraction_max))
        throw ConfigError("config: corpus fraction range must satisfy 0 < min <= max < 1");
    if (fps <= 0.0) throw ConfigError("config: fps must be > 0");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
    synth.validate();
    flow.validate();
    tcn.validate();
    if (mlp_hidden < 1) throw ConfigError("config: frameclf.hidden must be >= 1");
    if (!(motion.region_fraction > 0.0 && motion.region_fraction <= 1.0))
        throw ConfigError("config: motion.region_fraction must be in (0,1]");
    if (motion.median_width < 1 || motion.median_width % 2 == 0)
        throw ConfigError("config: motion.median_width must be odd");
}

std::string PipelineConfig::canonical() const {
    auto m = schema(const_cast<PipelineConfig&>(*this));
    std::string out;
    for (const auto& [key, entry] : m) {  // std::map iterates sorted
        out += key;
        out += '=';
        out += entry.get();
        out += '\n';
    }
    return out;
}

std::string PipelineConfig::canonical_subset(const std::vector<std::string>& prefixes) const {
    auto m = schema(const_cast<PipelineConfig&>(*this));
    std::string out;
    for (const auto& [key, entry] : m) {
        const bool match = std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) {
            return key.compare(0, p.size(), p) == 0;
        });
        if (match) {
            out += key;
            out += '=';
            out += entry.get();
            out += '\n';
        }
    }
    return out;
}

SynthConfig PipelineConfig::video_synth_config(int video_index) const {
    SynthConfig vc = synth;
    vc.seed = derive_seed(seed, 1000 + static_cast<uint64_t>(video_index));
    Rng rng(derive_seed(seed, 5000 + static_cast<uint64_t>(video_index)));
    vc.transition_fraction = rng.uniform(corpus.fraction_min, corpus.fraction_max);
    return vc;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace phaseparse
