#pragma once

// JSON scenario-spec loading, kept out of synth.hpp so only the CLI and the
// tests that need it pay for the json dependency.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "maptrack/synth.hpp"

namespace maptrack {

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec spec;
    spec.name = j.value("name", spec.name);
    spec.frame_width = j.value("frame_width", spec.frame_width);
    spec.frame_height = j.value("frame_height", spec.frame_height);
    spec.frame_count = j.value("frame_count", spec.frame_count);
    spec.frame_rate = j.value("frame_rate", spec.frame_rate);
    spec.jitter_std = j.value("jitter_std", spec.jitter_std);
    spec.embedding_noise_std = j.value("embedding_noise_std", spec.embedding_noise_std);
    spec.false_positive_rate = j.value("false_positive_rate", spec.false_positive_rate);
    spec.embedding_dim = j.value("embedding_dim", spec.embedding_dim);
    spec.rng_seed = j.value("rng_seed", spec.rng_seed);

    for (const auto& ja : j.value("agents", nlohmann::json::array())) {
        AgentSpec agent;
        agent.id = ja.at("id").get<int>();
        agent.box_w = ja.at("box_w").get<double>();
        agent.box_h = ja.at("box_h").get<double>();
        for (const auto& js : ja.at("segments")) {
            PathSegment seg;
            seg.first_frame = js.at("first").get<int>();
            seg.last_frame = js.at("last").get<int>();
            seg.x0 = js.at("x0").get<double>();
            seg.y0 = js.at("y0").get<double>();
            seg.x1 = js.at("x1").get<double>();
            seg.y1 = js.at("y1").get<double>();
            agent.segments.push_back(seg);
        }
        if (ja.contains("seed")) {
            const auto& values = ja.at("seed");
            Descriptor d(static_cast<Eigen::Index>(values.size()));
            for (std::size_t k = 0; k < values.size(); ++k)
                d(static_cast<Eigen::Index>(k)) = values[k].get<float>();
            d.normalize();
            agent.seed = d;
        }
        spec.agents.push_back(std::move(agent));
    }
    for (const auto& jw : j.value("occlusions", nlohmann::json::array())) {
        spec.occlusions.push_back({jw.at("agent").get<int>(), jw.at("first").get<int>(),
                                   jw.at("last").get<int>()});
    }
    for (const auto& jw : j.value("deformations", nlohmann::json::array())) {
        spec.deformations.push_back({jw.at("agent").get<int>(), jw.at("first").get<int>(),
                                     jw.at("last").get<int>(),
                                     jw.at("area_scale").get<double>()});
    }
    return spec;
}

inline ScenarioSpec read_scenario_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": invalid scenario spec: " + e.what());
    }
}

}  // namespace maptrack
