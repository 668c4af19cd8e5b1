// Acceptance suite: runs every scenario- and property-based criterion at its
// stated tolerance and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maptrack/metrics.hpp"
#include "maptrack/pipeline.hpp"
#include "maptrack/synth.hpp"
#include "oracles.hpp"

using namespace maptrack;

namespace {

int g_failures = 0;

void report(const char* tag, bool ok, const std::string& detail) {
    std::printf("%-4s %s  %s\n", tag, ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++g_failures;
}

std::vector<MotRow> rows_to_mot(const std::vector<ResultRow>& rows) {
    std::vector<MotRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        MotRow m;
        m.frame = r.frame;
        m.id = r.id;
        m.box = r.box;
        out.push_back(m);
    }
    return out;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// A1: identity preservation through a 5-frame occlusion. MapTrack bridges the
// gap with predicted boxes; the baseline deletes and re-creates the identity.
void criterion_a1() {
    const auto scenario = generate(preset("S1"));
    PipelineConfig cfg;  // published defaults, except emission from frame one
    cfg.n_init = 1;

    const auto t0 = std::chrono::steady_clock::now();
    MapTrackPipeline pipeline(scenario.meta.frame_width, scenario.meta.frame_height, cfg);
    const auto rows = pipeline.run(to_frame_detections(scenario, true), scenario.meta.frame_count);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const EvalReport maptrack_report = evaluate_rows(scenario.gt_rows, rows_to_mot(rows), 0.5);

    BaselineTracker baseline(scenario.meta.frame_width, scenario.meta.frame_height, cfg);
    const auto baseline_rows =
        baseline.run(to_frame_detections(scenario, false), scenario.meta.frame_count);
    const EvalReport baseline_report =
        evaluate_rows(scenario.gt_rows, rows_to_mot(baseline_rows), 0.5);

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "occlusion identity: maptrack IDSW=%d IDF1=%.3f, baseline IDSW=%d, %.3fs",
                  maptrack_report.idsw, maptrack_report.idf1, baseline_report.idsw, seconds);
    report("A1",
           maptrack_report.idsw == 0 && maptrack_report.idf1 == 1.0 &&
               baseline_report.idsw >= 1 && seconds < 1.0,
           detail);
}

// A2: CA covariance suppresses trajectory deviation under deformed detections.
void criterion_a2() {
    const auto scenario = generate(preset("S2"));
    const auto stream = to_frame_detections(scenario, true);
    const int window_first = 55, window_last = 57;  // deformation window of S2

    std::map<int, BoundingBox> gt_agent1;
    for (const auto& row : scenario.gt_rows)
        if (row.id == 1) gt_agent1[row.frame] = row.box;

    const auto max_deviation = [&](bool adaptive, bool& ok) {
        PipelineConfig cfg;
        cfg.noise.adaptive_covariance = adaptive;
        MapTrackPipeline pipeline(scenario.meta.frame_width, scenario.meta.frame_height, cfg);
        const auto rows = pipeline.run(stream, scenario.meta.frame_count);

        std::map<int, std::vector<ResultRow>> by_frame;
        for (const auto& r : rows) by_frame[r.frame].push_back(r);

        // Identify agent 1's hypothesis id over the ten frames before the window.
        std::map<int, double> overlap;
        for (int f = window_first - 10; f < window_first; ++f) {
            const auto git = gt_agent1.find(f);
            const auto hit = by_frame.find(f);
            if (git == gt_agent1.end() || hit == by_frame.end()) continue;
            for (const auto& r : hit->second) overlap[r.id] += iou(git->second, r.box);
        }
        int best_id = -1;
        double best = -1;
        for (const auto& [id, total] : overlap) {
            if (total > best) {
                best = total;
                best_id = id;
            }
        }
        ok = best_id >= 0;
        double max_dev = 0.0;
        for (int f = window_first; f <= window_last; ++f) {
            const auto git = gt_agent1.find(f);
            if (git == gt_agent1.end()) continue;
            bool found = false;
            for (const auto& r : by_frame[f]) {
                if (r.id != best_id) continue;
                const double dx = r.box.center_x() - git->second.center_x();
                const double dy = r.box.center_y() - git->second.center_y();
                max_dev = std::max(max_dev, std::sqrt(dx * dx + dy * dy));
                found = true;
            }
            if (!found) ok = false;  // identity lost during the window
        }
        return max_dev;
    };

    bool ok_adaptive = false, ok_plain = false;
    const double dev_adaptive = max_deviation(true, ok_adaptive);
    const double dev_plain = max_deviation(false, ok_plain);

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "deformation deviation: adaptive=%.3fpx fixed=%.3fpx (need <= 0.70x)",
                  dev_adaptive, dev_plain);
    report("A2", ok_adaptive && ok_plain && dev_adaptive <= 0.70 * dev_plain, detail);
}

// A3: exit/re-enter via the feature repository, with and without embeddings.
void criterion_a3() {
    const auto dir = std::filesystem::temp_directory_path() / "maptrack_acceptance_s3";
    std::filesystem::remove_all(dir);
    const auto files = generate_files(preset("S3"), dir.string());
    const SequenceMeta meta = read_seqinfo(files.seqinfo);
    PipelineConfig cfg;
    cfg.n_init = 1;

    const auto ids_around_gap = [&](const std::string& emb_path, std::set<int>& before,
                                    std::set<int>& after) {
        const auto stream = load_detections(files.det, emb_path, cfg.min_confidence);
        MapTrackPipeline pipeline(meta.frame_width, meta.frame_height, cfg);
        const auto rows = pipeline.run(stream, meta.frame_count);
        before.clear();
        after.clear();
        for (const auto& r : rows) {
            if (r.frame <= 40) before.insert(r.id);
            if (r.frame >= 75) after.insert(r.id);
        }
    };

    std::set<int> before_emb, after_emb, before_motion, after_motion;
    ids_around_gap(files.emb, before_emb, after_emb);
    ids_around_gap("", before_motion, after_motion);
    std::filesystem::remove_all(dir);

    const bool reid_ok = before_emb.size() == 1 && after_emb == before_emb;
    const bool motion_ok = before_motion.size() == 1 && after_motion.size() == 1 &&
                           *after_motion.begin() != *before_motion.begin();
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "re-identification: with embeddings id kept=%s, motion-only new id=%s",
                  reid_ok ? "yes" : "no", motion_ok ? "yes" : "no");
    report("A3", reid_ok && motion_ok, detail);
}

// A4: exact assignment optimality against brute force.
void criterion_a4() {
    std::mt19937 rng(101);
    std::uniform_int_distribution<int> dim(1, 7);
    std::uniform_int_distribution<int> value(0, 1000);
    int failures = 0;
    for (int iter = 0; iter < 500; ++iter) {
        const int n = dim(rng);
        Eigen::MatrixXd cost(n, n);
        std::vector<std::vector<double>> rows(n, std::vector<double>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) rows[i][j] = cost(i, j) = value(rng);
        const auto res = solve_assignment(
            cost, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false));
        double total = 0;
        for (const auto& [i, j] : res.matches) total += cost(i, j);
        if (total != oracles::brute_force_assignment(rows)) ++failures;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "assignment vs brute force: %d/500 mismatches",
                  failures);
    report("A4", failures == 0, detail);
}

// A5: IoU/IoI against pixel-rasterized counts, 2% relative tolerance.
void criterion_a5() {
    std::mt19937 rng(103);
    std::uniform_int_distribution<int> pos(0, 200);
    std::uniform_int_distribution<int> size(20, 120);
    int failures = 0;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const BoundingBox a{double(pos(rng)), double(pos(rng)), double(size(rng)),
                            double(size(rng))};
        const BoundingBox b{double(pos(rng)), double(pos(rng)), double(size(rng)),
                            double(size(rng))};
        const auto raster = oracles::rasterize_overlap(a, b);
        const double pairs[2][2] = {{iou(a, b), raster.iou()}, {ioi(a, b), raster.ioi_a()}};
        for (const auto& [analytic, reference] : pairs) {
            if (reference == 0.0) {
                if (analytic != 0.0) ++failures;
                continue;
            }
            const double rel = std::abs(analytic - reference) / reference;
            worst = std::max(worst, rel);
            if (rel > 0.02) ++failures;
        }
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "geometry raster oracle: %d/1000 out of tolerance, worst rel err %.2e",
                  failures, worst);
    report("A5", failures == 0, detail);
}

// A6: the deformation-band table, exact, for both coefficient classes.
void criterion_a6() {
    const NoiseConfig noise;
    const struct {
        double d;
        double normal;
        double predicted;
    } table[] = {
        {0.5, 15, 9}, {0.6, 9, 6}, {0.65, 9, 6}, {0.7, 6, 3},  {0.75, 6, 3},
        {0.8, 1, 1},  {1.0, 1, 1}, {1.2, 1, 1},  {1.25, 6, 3}, {1.3, 6, 3},
        {1.35, 9, 6}, {1.4, 9, 6}, {1.5, 15, 9},
    };
    int failures = 0;
    for (const auto& row : table) {
        if (covariance_multiplier(row.d, TrackClass::kNormalOrTentative, noise) != row.normal)
            ++failures;
        if (covariance_multiplier(row.d, TrackClass::kPredicted, noise) != row.predicted)
            ++failures;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "deformation band table: %d/26 mismatches", failures);
    report("A6", failures == 0, detail);
}

// A7: momentum smoothing follows the geometric series exactly and converges.
void criterion_a7() {
    const NoiseConfig noise;  // beta = 0.9
    const Eigen::Vector2d truth(3.0, -1.5);
    Eigen::Vector2d v(0, 0);
    Eigen::Vector2d center(0, 0);
    bool exact = true;
    double relative = 1.0;
    for (int k = 1; k <= 50; ++k) {
        const Eigen::Vector2d next = center + truth;
        v = smooth_velocity(v, center, next, noise);
        center = next;
        const Eigen::Vector2d expected = truth * (1.0 - std::pow(0.9, k));
        if ((v - expected).norm() > 1e-12) exact = false;
        relative = (v - truth).norm() / truth.norm();
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "momentum: geometric series %s, relative gap %.4f%% at frame 50",
                  exact ? "exact" : "WRONG", 100.0 * relative);
    report("A7", exact && relative < 0.01, detail);
}

// A8: metrics oracle on three crafted sequences, exact values.
void criterion_a8() {
    std::vector<MotRow> gt;
    for (int f = 1; f <= 10; ++f) {
        MotRow row;
        row.frame = f;
        row.id = 1;
        row.box = BoundingBox{50.0 + 4 * f, 20, 30, 60};
        gt.push_back(row);
    }
    const auto perfect = evaluate_rows(gt, gt, 0.5);
    const auto all_miss = evaluate_rows(gt, {}, 0.5);
    std::vector<MotRow> switched = gt;
    for (auto& row : switched)
        if (row.frame >= 6) row.id = 2;
    const auto sw = evaluate_rows(gt, switched, 0.5);

    const bool ok = perfect.mota == 1.0 && perfect.idf1 == 1.0 && perfect.idsw == 0 &&
                    perfect.frag == 0 && all_miss.fn == 10 && all_miss.mota == 0.0 &&
                    all_miss.idf1 == 0.0 && sw.idsw == 1 && sw.idf1 == 0.5 &&
                    std::abs(sw.mota - 0.9) < 1e-12 && sw.frag == 0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "metrics: perfect(%.1f/%.1f) all-miss(MOTA %.1f FN %d) switch(IDSW %d IDF1 %.2f)",
                  perfect.mota, perfect.idf1, all_miss.mota, all_miss.fn, sw.idsw, sw.idf1);
    report("A8", ok, detail);
}

// A9: byte-identical reruns and the online prefix property.
void criterion_a9() {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "maptrack_acceptance_a9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    bool ok = true;
    std::string detail = "determinism:";

    for (const std::string name : {"S1", "S5"}) {
        const auto scenario = generate(preset(name));
        const auto stream = to_frame_detections(scenario, true);
        PipelineConfig cfg;

        MapTrackPipeline first(scenario.meta.frame_width, scenario.meta.frame_height, cfg);
        MapTrackPipeline second(scenario.meta.frame_width, scenario.meta.frame_height, cfg);
        const auto rows_a = first.run(stream, scenario.meta.frame_count);
        const auto rows_b = second.run(stream, scenario.meta.frame_count);
        const std::string file_a = (dir / (name + "_a.txt")).string();
        const std::string file_b = (dir / (name + "_b.txt")).string();
        write_mot_results(file_a, rows_a);
        write_mot_results(file_b, rows_b);
        const bool identical = read_bytes(file_a) == read_bytes(file_b);

        const int k = scenario.meta.frame_count * 2 / 3;
        std::vector<FrameDetections> truncated;
        for (const auto& f : stream)
            if (f.frame <= k) truncated.push_back(f);
        MapTrackPipeline third(scenario.meta.frame_width, scenario.meta.frame_height, cfg);
        const auto rows_k = third.run(truncated, k);
        std::vector<ResultRow> prefix;
        for (const auto& r : rows_a)
            if (r.frame <= k) prefix.push_back(r);
        const std::string file_p = (dir / (name + "_prefix.txt")).string();
        const std::string file_k = (dir / (name + "_trunc.txt")).string();
        write_mot_results(file_p, prefix);
        write_mot_results(file_k, rows_k);
        const bool prefix_ok = read_bytes(file_p) == read_bytes(file_k);

        ok = ok && identical && prefix_ok;
        detail += " " + name + (identical ? " rerun=identical" : " rerun=DIFFERS") +
                  (prefix_ok ? " prefix=identical" : " prefix=DIFFERS");
    }
    fs::remove_all(dir);
    report("A9", ok, detail);
}

// A10: throughput sanity on 20 agents x 1000 frames; flagged, not fatal.
void criterion_a10() {
    const auto scenario = generate(preset("S5"));
    const auto stream = to_frame_detections(scenario, true);
    PipelineConfig cfg;
    const auto result = run_sequence(stream, scenario.meta, cfg, TrackerMode::kMapTrack);
    const double fps = result.frames_processed / std::max(result.seconds, 1e-9);
    char detail[160];
    std::snprintf(detail, sizeof(detail), "throughput: %.0f frames/s over %d frames%s", fps,
                  result.frames_processed,
                  fps > 200.0 ? "" : "  [WARN: below 200 fps target]");
    report("A10", true, detail);  // reported, not asserted fatal
    if (fps <= 200.0) std::printf("     note: throughput below the 200 fps target\n");
}

}  // namespace

int main() {
    criterion_a1();
    criterion_a2();
    criterion_a3();
    criterion_a4();
    criterion_a5();
    criterion_a6();
    criterion_a7();
    criterion_a8();
    criterion_a9();
    criterion_a10();
    std::printf("%s (%d failing)\n", g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
