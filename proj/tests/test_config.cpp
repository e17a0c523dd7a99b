#include <doctest.h>

#include <fstream>

#include "phaseparse/config.hpp"
#include "testutil.hpp"

using namespace phaseparse;

namespace {

std::filesystem::path write_config(const std::string& name, const std::string& text) {
    const auto dir = testutil::temp_dir("config_" + name);
    const auto path = dir / "config.txt";
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("config: parses dotted keys, comments and whitespace") {
    const auto path = write_config("ok", R"(# pipeline settings
seed = 7
fps = 25            # frames per second
corpus.videos = 3
synth.frames = 240
flow.levels=3
tcn.lambda = 0.25
)");
    const PipelineConfig cfg = PipelineConfig::from_file(path);
    CHECK(cfg.seed == 7);
    CHECK(cfg.fps == 25.0);
    CHECK(cfg.corpus.videos == 3);
    CHECK(cfg.synth.total_frames == 240);
    CHECK(cfg.flow.levels == 3);
    CHECK(cfg.tcn.smoothing_lambda == 0.25);
    // untouched keys keep their defaults
    CHECK(cfg.tcn.stages == 2);
}

TEST_CASE("config: unknown keys and malformed values rejected") {
    CHECK_THROWS_AS(PipelineConfig::from_file(write_config("unknown", "nonsense.key = 1\n")),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_file(write_config("badint", "corpus.videos = two\n")),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_file(write_config("badline", "corpus.videos\n")),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_file(write_config("badbool", "corpus.emit_flow = maybe\n")),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_file(write_config("badrange", "corpus.fraction_min = 0.9\ncorpus.fraction_max = 0.2\n")),
                    ConfigError);
}

TEST_CASE("config: canonical form ignores file ordering, hash tracks content") {
    const auto a = PipelineConfig::from_file(
        write_config("ord_a", "seed = 5\ncorpus.videos = 4\nfps = 24\n"));
    const auto b = PipelineConfig::from_file(
        write_config("ord_b", "fps = 24\nseed = 5\ncorpus.videos = 4\n"));
    CHECK(a.canonical() == b.canonical());
    CHECK(fnv1a64(a.canonical()) == fnv1a64(b.canonical()));

    PipelineConfig c = b;
    c.seed = 6;
    CHECK(fnv1a64(c.canonical()) != fnv1a64(b.canonical()));
}

TEST_CASE("config: canonical subsets select by prefix") {
    PipelineConfig cfg;
    const std::string synth_only = cfg.canonical_subset({"synth."});
    CHECK(synth_only.find("synth.frames=") != std::string::npos);
    CHECK(synth_only.find("flow.") == std::string::npos);
    const std::string with_seed = cfg.canonical_subset({"seed", "flow."});
    CHECK(with_seed.find("seed=") != std::string::npos);
    CHECK(with_seed.find("flow.levels=") != std::string::npos);
    CHECK(with_seed.find("synth.") == std::string::npos);
}

TEST_CASE("config: per-video generator configs are derived deterministically") {
    PipelineConfig cfg;
    cfg.seed = 9;
    const SynthConfig a = cfg.video_synth_config(3);
    const SynthConfig b = cfg.video_synth_config(3);
    CHECK(a.seed == b.seed);
    CHECK(a.transition_fraction == b.transition_fraction);
    CHECK(a.transition_fraction >= cfg.corpus.fraction_min);
    CHECK(a.transition_fraction <= cfg.corpus.fraction_max);
    const SynthConfig c = cfg.video_synth_config(4);
    CHECK(c.seed != a.seed);
}
