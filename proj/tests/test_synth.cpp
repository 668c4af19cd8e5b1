#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "maptrack/kalman.hpp"
#include "maptrack/synth.hpp"
#include "maptrack/synth_json.hpp"

using namespace maptrack;

namespace {

ScenarioSpec plain_spec() {
    ScenarioSpec spec;
    spec.frame_count = 50;
    spec.jitter_std = 0.0;
    spec.embedding_noise_std = 0.0;
    AgentSpec a;
    a.id = 1;
    a.box_w = 30;
    a.box_h = 60;
    a.segments = {{1, 50, 100, 200, 400, 200}};
    spec.agents.push_back(a);
    return spec;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("uncorrupted scenario detections equal the ground truth") {
    const auto scenario = generate(plain_spec());
    REQUIRE(scenario.gt_rows.size() == 50);
    REQUIRE(scenario.det_rows.size() == 50);
    for (std::size_t i = 0; i < scenario.gt_rows.size(); ++i) {
        CHECK(scenario.det_rows[i].id == -1);
        CHECK(scenario.det_rows[i].conf == 1.0);
        CHECK(scenario.det_rows[i].box.left ==
              Catch::Approx(scenario.gt_rows[i].box.left).margin(1e-9));
        CHECK(scenario.det_rows[i].box.width == scenario.gt_rows[i].box.width);
    }
}

TEST_CASE("occlusion suppresses exactly its window of detections") {
    auto spec = plain_spec();
    spec.occlusions.push_back({1, 20, 24});
    const auto scenario = generate(spec);
    CHECK(scenario.gt_rows.size() == 50);
    CHECK(scenario.det_rows.size() == 45);
    std::set<int> det_frames;
    for (const auto& r : scenario.det_rows) det_frames.insert(r.frame);
    for (int f = 20; f <= 24; ++f) CHECK_FALSE(det_frames.count(f));
    CHECK(det_frames.count(19));
    CHECK(det_frames.count(25));
    // Embeddings stay aligned with detections.
    CHECK(scenario.embedding_rows.size() == scenario.det_rows.size());
}

TEST_CASE("deformation scales the detection area with the center preserved") {
    auto spec = plain_spec();
    spec.deformations.push_back({1, 10, 14, 0.65});
    const auto scenario = generate(spec);
    for (std::size_t i = 0; i < scenario.det_rows.size(); ++i) {
        const auto& det = scenario.det_rows[i];
        const auto& gt = scenario.gt_rows[i];
        if (det.frame >= 10 && det.frame <= 14) {
            const double d = deformation_ratio(gt.box, det.box);
            CHECK(d == Catch::Approx(0.65).margin(1e-9));
            // Center preserved, so the ratio sits in the middle coefficient band.
            CHECK(covariance_multiplier(d, TrackClass::kNormalOrTentative, NoiseConfig{}) == 9.0);
            CHECK(det.box.center_x() == Catch::Approx(gt.box.center_x()).margin(1e-9));
            CHECK(det.box.center_y() == Catch::Approx(gt.box.center_y()).margin(1e-9));
        } else {
            CHECK(det.box.width == gt.box.width);
        }
    }
}

TEST_CASE("same seed gives byte-identical files, different seed differs") {
    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path() / "maptrack_synth_test";
    fs::remove_all(base);
    auto spec = preset("S1");
    const auto files_a = generate_files(spec, (base / "a").string());
    const auto files_b = generate_files(spec, (base / "b").string());
    CHECK(read_text(files_a.gt) == read_text(files_b.gt));
    CHECK(read_text(files_a.det) == read_text(files_b.det));
    CHECK(read_text(files_a.emb) == read_text(files_b.emb));

    spec.rng_seed += 1;
    const auto files_c = generate_files(spec, (base / "c").string());
    CHECK(read_text(files_a.det) != read_text(files_c.det));
    fs::remove_all(base);
}

TEST_CASE("agent embeddings stay closest to their own seed") {
    ScenarioSpec spec;
    spec.frame_count = 2500;  // 2 agents present everywhere: 5000 draws per run
    spec.embedding_noise_std = 0.05;
    spec.embedding_dim = 32;
    spec.rng_seed = 99;
    for (int i = 0; i < 2; ++i) {
        AgentSpec a;
        a.id = i + 1;
        a.box_w = 30;
        a.box_h = 60;
        a.segments = {{1, 2500, 100.0 + 200.0 * i, 200, 400.0 + 100.0 * i, 200}};
        spec.agents.push_back(a);
    }
    int correct = 0, total = 0;
    for (unsigned seed_offset = 0; seed_offset < 2; ++seed_offset) {
        spec.rng_seed = 99 + seed_offset;
        const auto scenario = generate(spec);
        REQUIRE(scenario.embedding_rows.size() == 5000);
        for (std::size_t i = 0; i < scenario.embedding_rows.size(); ++i) {
            const auto& emb = scenario.embedding_rows[i];
            Descriptor d(spec.embedding_dim);
            for (int k = 0; k < spec.embedding_dim; ++k) d(k) = emb.values[k];
            const int agent_index = static_cast<int>(emb.index);  // agents emitted in order
            const double own = 1.0 - d.dot(scenario.agent_seeds[agent_index]);
            const double other = 1.0 - d.dot(scenario.agent_seeds[1 - agent_index]);
            correct += own < other;
            ++total;
        }
    }
    CHECK(total == 10000);
    CHECK(static_cast<double>(correct) / total > 0.99);
}

TEST_CASE("presets validate and false positives appear at the configured rate") {
    for (const auto name : {"S1", "S2", "S3", "S4", "S5"}) {
        CHECK_NOTHROW(generate(preset(name)));
    }
    CHECK_THROWS_AS(preset("S9"), std::invalid_argument);

    auto spec = plain_spec();
    spec.false_positive_rate = 1.0;
    spec.rng_seed = 5;
    const auto scenario = generate(spec);
    const int extras = static_cast<int>(scenario.det_rows.size()) - 50;
    CHECK(extras > 20);  // Poisson(1) over 50 frames
    CHECK(extras < 100);
    for (const auto& r : scenario.det_rows) {
        if (r.conf == 0.5) {
            CHECK(r.box.left >= 0);
            CHECK(r.box.top >= 0);
        }
    }
}

TEST_CASE("invalid scenario specs are rejected") {
    auto spec = plain_spec();
    spec.agents[0].segments[0].last_frame = 500;  // beyond frame_count
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);

    spec = plain_spec();
    spec.agents[0].segments[0].x1 = 5000;  // waypoint outside frame
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);

    spec = plain_spec();
    spec.deformations.push_back({1, 10, 5, 0.65});  // inverted window
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("scenario specs load from json") {
    const auto j = nlohmann::json::parse(R"({
        "name": "tiny",
        "frame_width": 320, "frame_height": 240, "frame_count": 10,
        "jitter_std": 0.5, "rng_seed": 7,
        "agents": [
            {"id": 1, "box_w": 20, "box_h": 40,
             "segments": [{"first": 1, "last": 10, "x0": 50, "y0": 100, "x1": 150, "y1": 100}]}
        ],
        "occlusions": [{"agent": 1, "first": 4, "last": 5}],
        "deformations": [{"agent": 1, "first": 7, "last": 8, "area_scale": 0.7}]
    })");
    const ScenarioSpec spec = scenario_from_json(j);
    CHECK(spec.name == "tiny");
    CHECK(spec.frame_count == 10);
    REQUIRE(spec.agents.size() == 1);
    CHECK(spec.agents[0].segments[0].x1 == 150);
    REQUIRE(spec.occlusions.size() == 1);
    REQUIRE(spec.deformations.size() == 1);
    const auto scenario = generate(spec);
    CHECK(scenario.gt_rows.size() == 10);
    CHECK(scenario.det_rows.size() == 8);
}
