#pragma once

#include "speclearn/belief.hpp"
#include "speclearn/inference.hpp"
#include "speclearn/planner.hpp"

#include <json.hpp>

#include <string>

namespace speclearn {

using json = nlohmann::json;

/// [[0,1,0], [1,1,0], ...]
json trace_to_json(const Trace& tr);
/// Accepts a list of 0/1 (or bool) rows. Throws ParseError on ragged or empty input.
Trace trace_from_json(const json& j, const PropositionSet& props);

/// {"props": [...], "items": [{"steps": [...], "label": 1}, ...]}
json dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const json& j);

/// {"props": [...], "support": [{"formula": "...", "prob": 0.7}, ...]}
json belief_to_json(const Belief& b);
Belief belief_from_json(const json& j);

/// Keys match the command-line flags with dashes replaced by underscores.
json inference_config_to_json(const InferenceConfig& cfg);
/// Missing keys keep the defaults in `base`.
InferenceConfig inference_config_from_json(const json& j, InferenceConfig base = {});

json qlearning_config_to_json(const QLearningConfig& cfg);
QLearningConfig qlearning_config_from_json(const json& j, QLearningConfig base = {});

}  // namespace speclearn
