// maptrack command line: track / eval / synth / selfcheck.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "maptrack/io.hpp"
#include "maptrack/metrics.hpp"
#include "maptrack/pipeline.hpp"
#include "maptrack/synth.hpp"
#include "maptrack/synth_json.hpp"

#include "oracle_checks.hpp"

namespace {

struct TrackArgs {
    std::string det_path;
    std::string emb_path;
    std::string seqinfo_path;
    std::string config_path;
    std::string out_path;
    std::string mode = "maptrack";
    std::string dump_maps_prefix;
    int width = 0;
    int height = 0;
};

int run_track(const TrackArgs& args) {
    maptrack::PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = maptrack::read_config(args.config_path);

    maptrack::SequenceMeta meta;
    if (!args.seqinfo_path.empty()) meta = maptrack::read_seqinfo(args.seqinfo_path);
    if (args.width > 0) meta.frame_width = args.width;    // flags win over seqinfo
    if (args.height > 0) meta.frame_height = args.height;
    if (meta.frame_width <= 0 || meta.frame_height <= 0) {
        std::cerr << "error: frame size unknown; pass --seqinfo or --width/--height\n";
        return 2;
    }

    const auto stream =
        maptrack::load_detections(args.det_path, args.emb_path, cfg.min_confidence);
    if (meta.frame_count <= 0 && !stream.empty()) meta.frame_count = stream.back().frame;

    maptrack::SequenceRunResult result;
    if (args.mode == "baseline") {
        result = maptrack::run_sequence(stream, meta, cfg, maptrack::TrackerMode::kBaseline);
    } else if (!args.dump_maps_prefix.empty()) {
        const auto t0 = std::chrono::steady_clock::now();
        maptrack::MapTrackPipeline pipeline(meta.frame_width, meta.frame_height, cfg);
        result.rows = pipeline.run(stream, meta.frame_count);
        result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.frames_processed = meta.frame_count;
        std::set<int> ids;
        for (const auto& row : result.rows) ids.insert(row.id);
        result.distinct_ids = static_cast<int>(ids.size());

        std::ofstream(args.dump_maps_prefix + ".prob.txt")
            << pipeline.probability_map().to_text();
        std::ofstream(args.dump_maps_prefix + ".pred.txt")
            << pipeline.prediction_map().to_text();
    } else {
        result = maptrack::run_sequence(stream, meta, cfg, maptrack::TrackerMode::kMapTrack);
    }

    maptrack::write_mot_results(args.out_path, result.rows);
    const double fps = result.seconds > 0 ? result.frames_processed / result.seconds : 0.0;
    std::printf("frames=%d tracks=%d seconds=%.3f fps=%.1f\n", result.frames_processed,
                result.distinct_ids, result.seconds, fps);
    return 0;
}

int run_eval(const std::string& gt_path, const std::string& res_path, double iou_threshold,
             bool machine_readable) {
    const maptrack::EvalReport report = maptrack::evaluate(gt_path, res_path, iou_threshold);
    if (machine_readable) {
        std::printf("mota=%.6f\nidf1=%.6f\nidsw=%d\nfrag=%d\nfp=%d\nfn=%d\ngt=%d\n", report.mota,
                    report.idf1, report.idsw, report.frag, report.fp, report.fn, report.gt_count);
    } else {
        std::printf("%-8s %-8s %-6s %-6s %-6s %-6s %-6s\n", "MOTA", "IDF1", "IDSW", "Frag", "FP",
                    "FN", "GT");
        std::printf("%-8.3f %-8.3f %-6d %-6d %-6d %-6d %-6d\n", report.mota, report.idf1,
                    report.idsw, report.frag, report.fp, report.fn, report.gt_count);
    }
    return 0;
}

int run_synth(const std::string& preset_name, const std::string& spec_path,
              const std::string& out_dir) {
    maptrack::ScenarioSpec spec;
    if (!spec_path.empty()) {
        spec = maptrack::read_scenario_spec(spec_path);
    } else {
        spec = maptrack::preset(preset_name);
    }
    const auto files = maptrack::generate_files(spec, out_dir);
    std::printf("gt=%s\ndet=%s\nemb=%s\nseqinfo=%s\n", files.gt.c_str(), files.det.c_str(),
                files.emb.c_str(), files.seqinfo.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MapTrack multi-object tracking toolkit"};
    app.require_subcommand(1);

    TrackArgs track_args;
    CLI::App* track = app.add_subcommand("track", "run the tracker over a detection file");
    track->add_option("--det", track_args.det_path, "MOT detection file")
        ->required()
        ->check(CLI::ExistingFile);
    track->add_option("--emb", track_args.emb_path, "embedding sidecar")
        ->check(CLI::ExistingFile);
    track->add_option("--seqinfo", track_args.seqinfo_path, "seqinfo.ini companion file")
        ->check(CLI::ExistingFile);
    track->add_option("--width", track_args.width, "frame width in px");
    track->add_option("--height", track_args.height, "frame height in px");
    track->add_option("--config", track_args.config_path, "pipeline config file")
        ->check(CLI::ExistingFile);
    track->add_option("--out", track_args.out_path, "result file")->required();
    track->add_option("--mode", track_args.mode, "tracker mode")
        ->check(CLI::IsMember({"maptrack", "baseline"}));
    track->add_option("--dump-maps", track_args.dump_maps_prefix,
                      "write final occupancy grids to PREFIX.prob.txt / PREFIX.pred.txt");

    std::string gt_path, res_path;
    double eval_iou = 0.5;
    bool machine_readable = false;
    CLI::App* eval = app.add_subcommand("eval", "score a result file against ground truth");
    eval->add_option("--gt", gt_path, "ground-truth MOT file")->required()->check(CLI::ExistingFile);
    eval->add_option("--res", res_path, "result MOT file")->required()->check(CLI::ExistingFile);
    eval->add_option("--iou", eval_iou, "matching IoU threshold");
    eval->add_flag("--kv", machine_readable, "machine-readable key=value output");

    std::string preset_name, spec_path, out_dir;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scenario");
    auto* preset_opt =
        synth->add_option("--preset", preset_name, "canonical scenario S1..S5");
    auto* spec_opt = synth->add_option("--spec", spec_path, "scenario spec json")
                         ->check(CLI::ExistingFile);
    preset_opt->excludes(spec_opt);
    synth->add_option("--out", out_dir, "output directory")->required();

    CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the built-in sanity battery");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (track->parsed()) return run_track(track_args);
        if (eval->parsed()) return run_eval(gt_path, res_path, eval_iou, machine_readable);
        if (synth->parsed()) {
            if (preset_name.empty() && spec_path.empty()) {
                std::cerr << "error: synth needs --preset or --spec\n";
                return 2;
            }
            return run_synth(preset_name, spec_path, out_dir);
        }
        if (selfcheck->parsed()) return maptrack::tools::run_selfcheck() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
