#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "maptrack/geometry.hpp"
#include "maptrack/io.hpp"

namespace maptrack {

/// Linear motion between two centers over an inclusive frame range. An agent
/// is present only inside its segments; gaps between segments model leaving
/// the view.
struct PathSegment {
    int first_frame = 1;
    int last_frame = 1;
    double x0 = 0, y0 = 0;
    double x1 = 0, y1 = 0;
};

struct AgentSpec {
    int id = 1;
    double box_w = 36;
    double box_h = 72;
    std::vector<PathSegment> segments;
    Descriptor seed;  // optional explicit appearance seed; drawn from rng when empty
};

struct OcclusionWindow {
    int agent_id = 0;
    int first_frame = 0;
    int last_frame = 0;
};

struct DeformationWindow {
    int agent_id = 0;
    int first_frame = 0;
    int last_frame = 0;
    double area_scale = 1.0;  // detected area = GT area * area_scale, center preserved
};

struct ScenarioSpec {
    std::string name = "scenario";
    int frame_width = 640;
    int frame_height = 480;
    int frame_count = 100;
    double frame_rate = 30.0;
    std::vector<AgentSpec> agents;
    std::vector<OcclusionWindow> occlusions;
    std::vector<DeformationWindow> deformations;
    double jitter_std = 0.0;            // detection center jitter, px
    double embedding_noise_std = 0.05;  // per-dimension noise before renormalization
    double false_positive_rate = 0.0;   // Poisson mean per frame
    int embedding_dim = 32;
    unsigned rng_seed = 1;
};

struct GeneratedScenario {
    std::vector<MotRow> gt_rows;
    std::vector<MotRow> det_rows;  // id column -1
    std::vector<EmbeddingRow> embedding_rows;
    std::uint32_t embedding_dim = 0;
    SequenceMeta meta;
    std::vector<Descriptor> agent_seeds;  // in spec order
};

namespace synth_detail {

inline bool agent_center(const AgentSpec& agent, int frame, double& cx, double& cy) {
    for (const auto& seg : agent.segments) {
        if (frame < seg.first_frame || frame > seg.last_frame) continue;
        const double span = seg.last_frame - seg.first_frame;
        const double t = span > 0 ? (frame - seg.first_frame) / span : 0.0;
        cx = seg.x0 + t * (seg.x1 - seg.x0);
        cy = seg.y0 + t * (seg.y1 - seg.y0);
        return true;
    }
    return false;
}

inline bool in_window(int agent_id, int frame, int window_agent, int first, int last) {
    return agent_id == window_agent && frame >= first && frame <= last;
}

inline void validate(const ScenarioSpec& spec) {
    if (spec.frame_width <= 0 || spec.frame_height <= 0 || spec.frame_count <= 0) {
        throw std::invalid_argument("scenario frame size and count must be positive");
    }
    for (const auto& agent : spec.agents) {
        if (agent.box_w <= 0 || agent.box_h <= 0) {
            throw std::invalid_argument("agent box size must be positive");
        }
        for (const auto& seg : agent.segments) {
            if (seg.first_frame < 1 || seg.last_frame > spec.frame_count ||
                seg.first_frame > seg.last_frame) {
                throw std::invalid_argument("agent segment outside frame range");
            }
            for (const auto& [x, y] : {std::pair{seg.x0, seg.y0}, std::pair{seg.x1, seg.y1}}) {
                if (x < 0 || x > spec.frame_width || y < 0 || y > spec.frame_height) {
                    throw std::invalid_argument("agent waypoint outside frame");
                }
            }
        }
    }
    for (const auto& w : spec.occlusions) {
        if (w.first_frame < 1 || w.last_frame > spec.frame_count || w.first_frame > w.last_frame) {
            throw std::invalid_argument("occlusion window outside frame range");
        }
    }
    for (const auto& w : spec.deformations) {
        if (w.first_frame < 1 || w.last_frame > spec.frame_count || w.first_frame > w.last_frame) {
            throw std::invalid_argument("deformation window outside frame range");
        }
        if (w.area_scale <= 0) throw std::invalid_argument("deformation area scale must be positive");
    }
}

}  // namespace synth_detail

/// Deterministically renders a scenario into GT rows, corrupted detections,
/// and unit-norm embeddings. Identical specs produce identical outputs.
inline GeneratedScenario generate(const ScenarioSpec& spec) {
    synth_detail::validate(spec);
    GeneratedScenario out;
    out.meta = SequenceMeta{spec.frame_width, spec.frame_height, spec.frame_count,
                            spec.frame_rate};
    out.embedding_dim = static_cast<std::uint32_t>(spec.embedding_dim);

    std::mt19937 rng(spec.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto draw_unit_vector = [&]() {
        Descriptor v(spec.embedding_dim);
        for (int k = 0; k < spec.embedding_dim; ++k) v(k) = static_cast<float>(gauss(rng));
        const float norm = v.norm();
        return Descriptor(norm > 0 ? (v / norm).eval() : v);
    };

    for (const auto& agent : spec.agents) {
        out.agent_seeds.push_back(agent.seed.size() != 0 ? agent.seed : draw_unit_vector());
    }

    for (int frame = 1; frame <= spec.frame_count; ++frame) {
        std::uint32_t det_index = 0;
        for (std::size_t a = 0; a < spec.agents.size(); ++a) {
            const AgentSpec& agent = spec.agents[a];
            double cx = 0, cy = 0;
            if (!synth_detail::agent_center(agent, frame, cx, cy)) continue;

            MotRow gt;
            gt.frame = frame;
            gt.id = agent.id;
            gt.box = BoundingBox::from_center(cx, cy, agent.box_w, agent.box_h);
            out.gt_rows.push_back(gt);

            bool occluded = false;
            for (const auto& w : spec.occlusions) {
                if (synth_detail::in_window(agent.id, frame, w.agent_id, w.first_frame,
                                            w.last_frame)) {
                    occluded = true;
                    break;
                }
            }
            if (occluded) continue;

            const double dx = spec.jitter_std * gauss(rng);
            const double dy = spec.jitter_std * gauss(rng);
            double w = agent.box_w;
            double h = agent.box_h;
            for (const auto& win : spec.deformations) {
                if (synth_detail::in_window(agent.id, frame, win.agent_id, win.first_frame,
                                            win.last_frame)) {
                    const double side_scale = std::sqrt(win.area_scale);
                    w *= side_scale;
                    h *= side_scale;
                    break;
                }
            }

            MotRow det;
            det.frame = frame;
            det.id = -1;
            det.box = BoundingBox::from_center(cx + dx, cy + dy, w, h);
            det.conf = 1.0;
            out.det_rows.push_back(det);

            Descriptor desc = out.agent_seeds[a];
            for (int k = 0; k < spec.embedding_dim; ++k) {
                desc(k) += static_cast<float>(spec.embedding_noise_std * gauss(rng));
            }
            desc.normalize();
            EmbeddingRow emb;
            emb.frame = static_cast<std::uint32_t>(frame);
            emb.index = det_index++;
            emb.values.assign(desc.data(), desc.data() + desc.size());
            out.embedding_rows.push_back(std::move(emb));
        }

        if (spec.false_positive_rate > 0.0) {
            std::poisson_distribution<int> poisson(spec.false_positive_rate);
            const int count = poisson(rng);
            for (int k = 0; k < count; ++k) {
                const double w = 20.0 + 40.0 * unit(rng);
                const double h = 40.0 + 80.0 * unit(rng);
                const double cx = spec.frame_width * (0.1 + 0.8 * unit(rng));
                const double cy = spec.frame_height * (0.1 + 0.8 * unit(rng));
                MotRow det;
                det.frame = frame;
                det.id = -1;
                det.box = BoundingBox::from_center(cx, cy, w, h);
                det.conf = 0.5;
                out.det_rows.push_back(det);

                const Descriptor noise_desc = draw_unit_vector();
                EmbeddingRow emb;
                emb.frame = static_cast<std::uint32_t>(frame);
                emb.index = det_index++;
                emb.values.assign(noise_desc.data(), noise_desc.data() + noise_desc.size());
                out.embedding_rows.push_back(std::move(emb));
            }
        }
    }
    return out;
}

/// In-memory view of a generated scenario as a tracker input stream.
inline std::vector<FrameDetections> to_frame_detections(const GeneratedScenario& scenario,
                                                        bool with_descriptors) {
    std::map<int, FrameDetections> by_frame;
    for (const auto& row : scenario.det_rows) {
        auto& bucket = by_frame[row.frame];
        bucket.frame = row.frame;
        Detection det;
        det.box = row.box;
        det.confidence = row.conf;
        bucket.entries.push_back(std::move(det));
    }
    if (with_descriptors) {
        for (const auto& emb : scenario.embedding_rows) {
            auto& bucket = by_frame.at(static_cast<int>(emb.frame));
            Descriptor d(static_cast<Eigen::Index>(emb.values.size()));
            for (std::size_t k = 0; k < emb.values.size(); ++k)
                d(static_cast<Eigen::Index>(k)) = emb.values[k];
            d.normalize();
            bucket.entries.at(emb.index).descriptor = std::move(d);
        }
    }
    std::vector<FrameDetections> out;
    out.reserve(by_frame.size());
    for (auto& [frame, dets] : by_frame) out.push_back(std::move(dets));
    return out;
}

struct ScenarioFiles {
    std::string gt;
    std::string det;
    std::string emb;
    std::string seqinfo;
};

/// Renders a scenario and writes gt.txt / det.txt / emb.bin / seqinfo.ini
/// under `dir` (created if missing).
inline ScenarioFiles generate_files(const ScenarioSpec& spec, const std::string& dir) {
    const GeneratedScenario scenario = generate(spec);
    std::filesystem::create_directories(dir);
    ScenarioFiles files;
    files.gt = (std::filesystem::path(dir) / "gt.txt").string();
    files.det = (std::filesystem::path(dir) / "det.txt").string();
    files.emb = (std::filesystem::path(dir) / "emb.bin").string();
    files.seqinfo = (std::filesystem::path(dir) / "seqinfo.ini").string();
    write_mot_gt(files.gt, scenario.gt_rows);

    {
        std::ofstream out(files.det);
        if (!out) throw std::runtime_error("cannot open " + files.det + " for writing");
        char buf[160];
        for (const auto& row : scenario.det_rows) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,%.4f,-1,-1,-1\n",
                          row.frame, row.id, row.box.left, row.box.top, row.box.width,
                          row.box.height, row.conf);
            out << buf;
        }
    }
    write_embeddings(files.emb, scenario.embedding_dim, scenario.embedding_rows);
    write_seqinfo(files.seqinfo, scenario.meta, spec.name);
    return files;
}

/// Canonical scenarios backing the verification suite.
///   S1 occlusion-5: one crossing agent, detections suppressed 5 frames.
///   S2 crowd-cross: two crossing agents, one deformed while they overlap.
///   S3 exit-reenter: agent leaves the frame and returns 30 frames later.
///   S4 static-crowd: five overlapping near-static agents.
///   S5 lanes-20: 20 agents over 1000 frames for throughput runs.
inline ScenarioSpec preset(const std::string& name) {
    ScenarioSpec spec;
    spec.name = name;
    if (name == "S1") {
        spec.frame_count = 100;
        spec.jitter_std = 0.4;
        spec.rng_seed = 11;
        AgentSpec a;
        a.id = 1;
        a.box_w = 36;
        a.box_h = 72;
        a.segments = {{1, 100, 60, 240, 580, 240}};
        spec.agents.push_back(a);
        spec.occlusions.push_back({1, 48, 52});
    } else if (name == "S2") {
        spec.frame_count = 120;
        spec.jitter_std = 2.0;
        spec.rng_seed = 31;
        AgentSpec a;
        a.id = 1;
        a.box_w = 40;
        a.box_h = 80;
        a.segments = {{1, 120, 80, 200, 560, 200}};
        spec.agents.push_back(a);
        AgentSpec b;
        b.id = 2;
        b.box_w = 40;
        b.box_h = 80;
        b.segments = {{1, 120, 560, 248, 80, 248}};
        spec.agents.push_back(b);
        spec.deformations.push_back({1, 55, 57, 0.65});
    } else if (name == "S3") {
        spec.frame_count = 140;
        spec.jitter_std = 0.4;
        spec.rng_seed = 33;
        AgentSpec a;
        a.id = 1;
        a.box_w = 36;
        a.box_h = 72;
        a.segments = {{1, 40, 300, 240, 632, 240}, {71, 140, 632, 264, 300, 264}};
        spec.agents.push_back(a);
    } else if (name == "S4") {
        spec.frame_count = 100;
        spec.jitter_std = 0.8;
        spec.rng_seed = 44;
        const double cx = 320, cy = 240;
        const std::pair<double, double> offsets[5] = {
            {0, 0}, {-26, 0}, {26, 0}, {0, -32}, {0, 32}};
        const double drift[5] = {6, -6, 8, -8, 5};
        for (int i = 0; i < 5; ++i) {
            AgentSpec a;
            a.id = i + 1;
            a.box_w = 44;
            a.box_h = 88;
            const double x = cx + offsets[i].first;
            const double y = cy + offsets[i].second;
            a.segments = {{1, 100, x, y, x + drift[i], y}};
            spec.agents.push_back(a);
        }
    } else if (name == "S5") {
        spec.frame_width = 960;
        spec.frame_height = 720;
        spec.frame_count = 1000;
        spec.jitter_std = 0.5;
        spec.false_positive_rate = 0.15;
        spec.rng_seed = 55;
        for (int i = 0; i < 20; ++i) {
            AgentSpec a;
            a.id = i + 1;
            a.box_w = 30;
            a.box_h = 60;
            const double y = 60.0 + 33.0 * i;
            const double x_near = 80.0 + (i % 5) * 40.0;
            const double x_far = 880.0 - (i % 7) * 30.0;
            if (i % 2 == 0) {
                a.segments = {{1, 500, x_near, y, x_far, y}, {501, 1000, x_far, y, x_near, y}};
            } else {
                a.segments = {{1, 500, x_far, y, x_near, y}, {501, 1000, x_near, y, x_far, y}};
            }
            spec.agents.push_back(a);
        }
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected S1..S5)");
    }
    return spec;
}

}  // namespace maptrack
