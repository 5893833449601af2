#pragma once

#include <string>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/scene.hpp"
#include "avdiff/splats.hpp"

namespace avdiff {

// Frozen caption vocabulary shared by the caption templates, the text
// conditioning path, and the metric embedder.
inline const std::vector<std::string>& caption_vocabulary() {
    static const std::vector<std::string> tokens = {
        "a",      "man",      "woman",    "in",       "on",       "and",      "white",
        "shirt",  "yellow",   "dress",    "blue",     "suit",     "red",      "green",
        "park",   "beach",    "street",   "ballroom", "walking",  "jumping",  "waving",
        "boxing", "squatting", "spinning", "dancing"};
    return tokens;
}

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::string action_verb(const std::string& action) {
    if (action == "walk") return "walking";
    if (action == "jump") return "jumping";
    if (action == "wave") return "waving";
    if (action == "box") return "boxing";
    if (action == "squat") return "squatting";
    if (action == "spin") return "spinning";
    if (action == "latin_dance") return "dancing";
    throw ConfigError("unknown action: " + action);
}

// Deterministic caption template, e.g. "a man in a white shirt and a woman in
// a yellow dress dancing in a park". Every emitted token is in the frozen
// vocabulary.
inline std::string caption(const std::string& scene_id,
                           const std::vector<std::string>& appearance_ids,
                           const std::string& action) {
    if (appearance_ids.empty()) throw ConfigError("caption needs at least one appearance id");
    std::string out;
    for (std::size_t i = 0; i < appearance_ids.size(); ++i) {
        if (i) out += " and ";
        out += appearance_from_id(appearance_ids[i]).caption_fragment;
    }
    out += " " + action_verb(action);
    out += " " + scene_from_id(scene_id, 0).caption_fragment;
    return out;
}

}  // namespace avdiff
