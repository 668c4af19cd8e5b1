#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "maptrack/config.hpp"
#include "maptrack/detection.hpp"

namespace maptrack {

struct SequenceMeta {
    int frame_width = 0;
    int frame_height = 0;
    int frame_count = 0;
    double frame_rate = 30.0;
};

/// One line of a MOT-format file:
/// frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z
/// Ground-truth files reuse columns 8-10 as class and visibility.
struct MotRow {
    int frame = 0;
    int id = -1;
    BoundingBox box;
    double conf = 1.0;
    double f8 = -1.0;
    double f9 = -1.0;
    double f10 = -1.0;
    int fields = 10;
};

struct ResultRow {
    int frame = 0;
    int id = 0;
    BoundingBox box;
};

namespace io_detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// from_chars keeps parsing locale-independent: only the dot decimal
// separator is ever accepted.
inline bool parse_double_strict(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline bool parse_int_strict(const std::string& s, long long& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) out.push_back(field);
    return out;
}

}  // namespace io_detail

/// Parses a MOT-format file preserving row order. Rows must have 7 to 10
/// comma-separated numeric fields and a positive-size box.
inline std::vector<MotRow> read_mot_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<MotRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = io_detail::trim(line);
        if (stripped.empty()) continue;
        const auto fields = io_detail::split(stripped, ',');
        if (fields.size() < 7 || fields.size() > 10) {
            throw std::runtime_error(path + ": malformed row at line " +
                                     std::to_string(line_no) + " (expected 7-10 fields, got " +
                                     std::to_string(fields.size()) + ")");
        }
        std::array<double, 10> v{};
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!io_detail::parse_double_strict(fields[i], v[i])) {
                throw std::runtime_error(path + ": malformed row at line " +
                                         std::to_string(line_no) + " (field " +
                                         std::to_string(i + 1) + " not numeric)");
            }
        }
        MotRow row;
        row.frame = static_cast<int>(v[0]);
        row.id = static_cast<int>(v[1]);
        row.box = BoundingBox{v[2], v[3], v[4], v[5]};
        row.conf = v[6];
        row.f8 = fields.size() > 7 ? v[7] : -1.0;
        row.f9 = fields.size() > 8 ? v[8] : -1.0;
        row.f10 = fields.size() > 9 ? v[9] : -1.0;
        row.fields = static_cast<int>(fields.size());
        if (row.frame <= 0) {
            throw std::runtime_error(path + ": malformed row at line " +
                                     std::to_string(line_no) + " (frame must be positive)");
        }
        if (!row.box.valid()) {
            throw std::runtime_error(path + ": malformed row at line " +
                                     std::to_string(line_no) + " (box size must be positive)");
        }
        rows.push_back(row);
    }
    return rows;
}

namespace io_detail {

/// Groups rows by frame, ascending, preserving within-frame file order.
inline std::vector<FrameDetections> group_rows(const std::vector<MotRow>& rows) {
    std::map<int, FrameDetections> by_frame;
    for (const auto& row : rows) {
        auto& bucket = by_frame[row.frame];
        bucket.frame = row.frame;
        Detection det;
        det.box = row.box;
        det.confidence = row.conf;
        bucket.entries.push_back(std::move(det));
    }
    std::vector<FrameDetections> out;
    out.reserve(by_frame.size());
    for (auto& [frame, dets] : by_frame) out.push_back(std::move(dets));
    return out;
}

}  // namespace io_detail

// --- embedding sidecar ------------------------------------------------------
//
// Binary layout, little endian:
//   4 bytes magic "MTEB", u32 descriptor dim D, u32 row count,
//   then per row: u32 frame, u32 index-within-frame, D float32 values.
// Rows index the raw detection file before any confidence filtering.

inline constexpr char kEmbeddingMagic[4] = {'M', 'T', 'E', 'B'};

struct EmbeddingRow {
    std::uint32_t frame = 0;
    std::uint32_t index = 0;
    std::vector<float> values;
};

inline void write_embeddings(const std::string& path, std::uint32_t dim,
                             const std::vector<EmbeddingRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(kEmbeddingMagic, 4);
    const auto put_u32 = [&out](std::uint32_t v) {
        out.write(reinterpret_cast<const char*>(&v), 4);
    };
    put_u32(dim);
    put_u32(static_cast<std::uint32_t>(rows.size()));
    for (const auto& row : rows) {
        if (row.values.size() != dim) {
            throw std::runtime_error("embedding row dimensionality mismatch");
        }
        put_u32(row.frame);
        put_u32(row.index);
        out.write(reinterpret_cast<const char*>(row.values.data()),
                  static_cast<std::streamsize>(dim * sizeof(float)));
    }
}

inline std::vector<EmbeddingRow> read_embedding_rows(const std::string& path,
                                                     std::uint32_t& dim_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
        throw std::runtime_error(path + ": not an embedding sidecar (bad magic)");
    }
    const auto get_u32 = [&in, &path]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw std::runtime_error(path + ": truncated embedding sidecar");
        return v;
    };
    dim_out = get_u32();
    const std::uint32_t count = get_u32();
    std::vector<EmbeddingRow> rows;
    rows.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        EmbeddingRow row;
        row.frame = get_u32();
        row.index = get_u32();
        row.values.resize(dim_out);
        in.read(reinterpret_cast<char*>(row.values.data()),
                static_cast<std::streamsize>(dim_out * sizeof(float)));
        if (!in) throw std::runtime_error(path + ": truncated embedding sidecar");
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace io_detail {

/// Attaches sidecar descriptors to raw (unfiltered) per-frame detections.
/// Descriptor counts must match the raw detection counts exactly.
inline void attach_embeddings(std::vector<FrameDetections>& frames, const std::string& emb_path) {
    std::uint32_t dim = 0;
    const auto rows = read_embedding_rows(emb_path, dim);
    std::map<std::uint32_t, std::vector<const EmbeddingRow*>> by_frame;
    for (const auto& row : rows) by_frame[row.frame].push_back(&row);

    std::map<int, std::size_t> det_counts;
    for (const auto& f : frames) det_counts[f.frame] = f.entries.size();
    for (const auto& [frame, embs] : by_frame) {
        const auto it = det_counts.find(static_cast<int>(frame));
        const std::size_t det_count = it == det_counts.end() ? 0 : it->second;
        if (embs.size() != det_count) {
            throw std::runtime_error(emb_path + ": embedding count mismatch at frame " +
                                     std::to_string(frame) + " (" + std::to_string(embs.size()) +
                                     " embeddings vs " + std::to_string(det_count) +
                                     " detections)");
        }
    }
    for (auto& f : frames) {
        const auto it = by_frame.find(static_cast<std::uint32_t>(f.frame));
        if (it == by_frame.end()) {
            if (!f.entries.empty()) {
                throw std::runtime_error(emb_path + ": embedding count mismatch at frame " +
                                         std::to_string(f.frame) + " (0 embeddings vs " +
                                         std::to_string(f.entries.size()) + " detections)");
            }
            continue;
        }
        for (const EmbeddingRow* row : it->second) {
            if (row->index >= f.entries.size()) {
                throw std::runtime_error(emb_path + ": embedding index out of range at frame " +
                                         std::to_string(f.frame));
            }
            Descriptor d(static_cast<Eigen::Index>(row->values.size()));
            for (std::size_t k = 0; k < row->values.size(); ++k)
                d(static_cast<Eigen::Index>(k)) = row->values[k];
            const float norm = d.norm();
            if (!(norm > 1e-12f)) {
                throw std::runtime_error(emb_path + ": zero-norm descriptor at frame " +
                                         std::to_string(f.frame));
            }
            f.entries[row->index].descriptor = d / norm;
        }
    }
}

}  // namespace io_detail

/// Reads a MOT detection file, grouped by frame ascending, dropping rows below
/// the confidence threshold.
inline std::vector<FrameDetections> read_mot_detections(const std::string& path,
                                                        double min_confidence) {
    auto frames = io_detail::group_rows(read_mot_rows(path));
    for (auto& f : frames) {
        std::erase_if(f.entries,
                      [&](const Detection& d) { return d.confidence < min_confidence; });
    }
    std::erase_if(frames, [](const FrameDetections& f) { return f.entries.empty(); });
    return frames;
}

/// Reads detections plus an optional embedding sidecar. The sidecar indexes
/// raw file rows, so descriptors are attached before confidence filtering.
inline std::vector<FrameDetections> load_detections(const std::string& det_path,
                                                    const std::string& emb_path,
                                                    double min_confidence) {
    auto frames = io_detail::group_rows(read_mot_rows(det_path));
    if (!emb_path.empty()) io_detail::attach_embeddings(frames, emb_path);
    for (auto& f : frames) {
        std::erase_if(f.entries,
                      [&](const Detection& d) { return d.confidence < min_confidence; });
    }
    std::erase_if(frames, [](const FrameDetections& f) { return f.entries.empty(); });
    return frames;
}

/// Writes result rows frame-major, id-ascending, with fixed 2-decimal
/// coordinates so identical runs produce byte-identical files.
inline void write_mot_results(const std::string& path, std::vector<ResultRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.id < b.id;
    });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,1,-1,-1,-1\n", row.frame,
                      row.id, row.box.left, row.box.top, row.box.width, row.box.height);
        out << buf;
    }
}

/// Writes ground-truth rows (consider flag 1, pedestrian class, full visibility).
inline void write_mot_gt(const std::string& path, std::vector<MotRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const MotRow& a, const MotRow& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.id < b.id;
    });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,1,1,1\n", row.frame, row.id,
                      row.box.left, row.box.top, row.box.width, row.box.height);
        out << buf;
    }
}

/// Reads a seqinfo.ini-style companion file (imWidth/imHeight/seqLength/frameRate).
inline SequenceMeta read_seqinfo(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    SequenceMeta meta;
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = io_detail::trim(line);
        if (stripped.empty() || stripped[0] == '[' || stripped[0] == ';') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = io_detail::trim(stripped.substr(0, eq));
        const std::string value = io_detail::trim(stripped.substr(eq + 1));
        long long iv = 0;
        double dv = 0.0;
        if (key == "imWidth" && io_detail::parse_int_strict(value, iv)) {
            meta.frame_width = static_cast<int>(iv);
        } else if (key == "imHeight" && io_detail::parse_int_strict(value, iv)) {
            meta.frame_height = static_cast<int>(iv);
        } else if (key == "seqLength" && io_detail::parse_int_strict(value, iv)) {
            meta.frame_count = static_cast<int>(iv);
        } else if (key == "frameRate" && io_detail::parse_double_strict(value, dv)) {
            meta.frame_rate = dv;
        }
    }
    return meta;
}

inline void write_seqinfo(const std::string& path, const SequenceMeta& meta,
                          const std::string& name) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "[Sequence]\nname=" << name << "\nimWidth=" << meta.frame_width
        << "\nimHeight=" << meta.frame_height << "\nseqLength=" << meta.frame_count
        << "\nframeRate=" << meta.frame_rate << "\n";
}

// --- pipeline configuration --------------------------------------------------

/// Rejects configurations that violate the documented parameter invariants.
/// Applied to file-loaded configs; programmatic configs may deliberately
/// bend these for A/B experiments.
inline void validate_config(const PipelineConfig& cfg, const std::string& origin) {
    const auto fail = [&origin](const std::string& what) {
        throw std::runtime_error(origin + ": " + what);
    };
    if (cfg.n_init < 1) fail("n_init must be at least 1");
    if (cfg.max_predicted_age < 1) fail("max_predicted_age must be at least 1");
    if (!(cfg.noise.momentum_beta >= 0.0 && cfg.noise.momentum_beta < 1.0))
        fail("beta must be in [0, 1)");
    if (cfg.noise.frame_interval <= 0.0) fail("frame_interval must be positive");
    for (const auto* coefs : {&cfg.noise.normal_coefs, &cfg.noise.predicted_coefs}) {
        if (!(coefs->coef1 >= coefs->coef2 && coefs->coef2 >= coefs->coef3 &&
              coefs->coef3 >= 1.0)) {
            fail("coefficients must satisfy coef1 >= coef2 >= coef3 >= 1");
        }
    }
    if (!(cfg.map.thresh1 > 0.0)) fail("thresh1 must be positive");
    if (!(cfg.map.thresh2 >= 1.0)) fail("thresh2 must be at least 1");
    if (cfg.map.border_margin_cells < 0) fail("border_margin_cells must be non-negative");
    for (const auto& [name, gate] :
         {std::pair{"iou_gate", cfg.association.iou_gate},
          std::pair{"reid_gate", cfg.association.reid_gate},
          std::pair{"dual_iou_gate", cfg.association.dual_iou_gate},
          std::pair{"dual_reid_gate", cfg.association.dual_reid_gate},
          std::pair{"det_ioi_gate", cfg.filter.det_ioi_gate},
          std::pair{"ambiguous_ioi_gate", cfg.filter.ambiguous_ioi_gate}}) {
        if (!(gate > 0.0 && gate <= 1.0)) fail(std::string(name) + " must be in (0, 1]");
    }
    if (!(cfg.filter.thresh3 > 0.0)) fail("thresh3 must be positive");
    if (cfg.filter.far_ioi_zero_frames < 1) fail("far_ioi_zero_frames must be at least 1");
    if (cfg.filter.reid_closeness_eps < 0.0) fail("reid_closeness_eps must be non-negative");
}

/// Parses a plain key = value config file onto the documented defaults.
/// Lines starting with '#' are comments. Unknown keys and values of the wrong
/// type are errors.
inline PipelineConfig read_config_text(const std::string& text, const std::string& origin) {
    PipelineConfig cfg;

    using Setter = std::function<bool(const std::string&)>;
    const auto set_int = [](int& field) {
        return [&field](const std::string& v) {
            long long iv = 0;
            if (!io_detail::parse_int_strict(v, iv)) return false;
            field = static_cast<int>(iv);
            return true;
        };
    };
    const auto set_size = [](std::size_t& field) {
        return [&field](const std::string& v) {
            long long iv = 0;
            if (!io_detail::parse_int_strict(v, iv) || iv < 0) return false;
            field = static_cast<std::size_t>(iv);
            return true;
        };
    };
    const auto set_double = [](double& field) {
        return [&field](const std::string& v) {
            double dv = 0.0;
            if (!io_detail::parse_double_strict(v, dv)) return false;
            field = dv;
            return true;
        };
    };
    const auto set_bool = [](bool& field) {
        return [&field](const std::string& v) {
            if (v == "true" || v == "1") {
                field = true;
            } else if (v == "false" || v == "0") {
                field = false;
            } else {
                return false;
            }
            return true;
        };
    };

    const std::unordered_map<std::string, Setter> setters = {
        {"n_init", set_int(cfg.n_init)},
        {"max_predicted_age", set_int(cfg.max_predicted_age)},
        {"repository_capacity", set_size(cfg.repository_capacity)},
        {"repository_max_age", set_int(cfg.repository_max_age)},
        {"emit_predicted", set_bool(cfg.emit_predicted)},
        {"min_confidence", set_double(cfg.min_confidence)},
        {"enable_filters", set_bool(cfg.enable_filters)},
        {"baseline_deletion", set_bool(cfg.baseline_deletion)},
        {"beta", set_double(cfg.noise.momentum_beta)},
        {"frame_interval", set_double(cfg.noise.frame_interval)},
        {"adaptive_covariance", set_bool(cfg.noise.adaptive_covariance)},
        {"coef1_normal", set_double(cfg.noise.normal_coefs.coef1)},
        {"coef2_normal", set_double(cfg.noise.normal_coefs.coef2)},
        {"coef3_normal", set_double(cfg.noise.normal_coefs.coef3)},
        {"coef1_predicted", set_double(cfg.noise.predicted_coefs.coef1)},
        {"coef2_predicted", set_double(cfg.noise.predicted_coefs.coef2)},
        {"coef3_predicted", set_double(cfg.noise.predicted_coefs.coef3)},
        {"thresh1", set_double(cfg.map.thresh1)},
        {"thresh2", set_double(cfg.map.thresh2)},
        {"border_margin_cells", set_int(cfg.map.border_margin_cells)},
        {"warmup_frames", set_int(cfg.map.warmup_frames)},
        {"iou_gate", set_double(cfg.association.iou_gate)},
        {"reid_gate", set_double(cfg.association.reid_gate)},
        {"dual_iou_gate", set_double(cfg.association.dual_iou_gate)},
        {"dual_reid_gate", set_double(cfg.association.dual_reid_gate)},
        {"gallery_capacity", set_size(cfg.association.gallery_capacity)},
        {"det_ioi_gate", set_double(cfg.filter.det_ioi_gate)},
        {"ambiguous_ioi_gate", set_double(cfg.filter.ambiguous_ioi_gate)},
        {"reid_closeness_eps", set_double(cfg.filter.reid_closeness_eps)},
        {"thresh3", set_double(cfg.filter.thresh3)},
        {"far_ioi_zero_frames", set_int(cfg.filter.far_ioi_zero_frames)},
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string stripped = io_detail::trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(origin + ": expected key = value at line " +
                                     std::to_string(line_no));
        }
        const std::string key = io_detail::trim(stripped.substr(0, eq));
        const std::string value = io_detail::trim(stripped.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw std::runtime_error(origin + ": unknown config key '" + key + "' at line " +
                                     std::to_string(line_no));
        }
        if (!it->second(value)) {
            throw std::runtime_error(origin + ": invalid value '" + value + "' for key '" + key +
                                     "' at line " + std::to_string(line_no));
        }
    }
    validate_config(cfg, origin);
    return cfg;
}

inline PipelineConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_config_text(buf.str(), path);
}

}  // namespace maptrack
