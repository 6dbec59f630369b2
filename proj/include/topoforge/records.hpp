#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topoforge/anomaly.hpp"
#include "topoforge/errors.hpp"
#include "topoforge/mask.hpp"
#include "topoforge/mask_io.hpp"
#include "topoforge/topology.hpp"

namespace topoforge::data {

using nlohmann::json;

inline json anomaly_to_json(const Anomaly& a) {
    return json{{"Position", {a.box.x1, a.box.y1, a.box.x2, a.box.y2}},
                {"ErrorType", std::string(to_label(a.type))}};
}

inline Anomaly anomaly_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("Position") || !j.contains("ErrorType"))
        throw ValidationError(where + ": annotation needs Position and ErrorType");
    const auto& pos = j["Position"];
    if (!pos.is_array() || pos.size() != 4) throw ValidationError(where + ": Position must hold 4 integers");
    Anomaly a;
    int* coords[4] = {&a.box.x1, &a.box.y1, &a.box.x2, &a.box.y2};
    for (std::size_t c = 0; c < 4; ++c) {
        if (!pos[c].is_number_integer()) throw ValidationError(where + ": Position entries must be integers");
        *coords[c] = pos[c].get<int>();
    }
    if (!a.box.valid()) throw ValidationError(where + ": box violates 0 <= x1 < x2 <= 1000");
    if (!j["ErrorType"].is_string()) throw ValidationError(where + ": ErrorType must be a string");
    const auto type = parse_label(j["ErrorType"].get<std::string>());
    if (!type) throw ValidationError(where + ": unknown ErrorType " + j["ErrorType"].get<std::string>());
    a.type = *type;
    return a;
}

/// One persisted sample. Mask paths are stored relative to the JSONL file
/// unless absolute. Unknown JSON fields survive a read/write round trip.
struct SampleLine {
    std::string id;
    std::string source;
    std::string mask_clean;
    std::string mask_corrupt;
    std::string image;  // optional, empty when absent
    int width = 0;
    int height = 0;
    BettiPair betti_before;
    BettiPair betti_after;
    std::vector<Anomaly> annotations;
    std::uint64_t seed = 0;
    json extra = json::object();
};

inline json to_json(const SampleLine& s) {
    json j = s.extra.is_object() ? s.extra : json::object();
    j["id"] = s.id;
    j["source"] = s.source;
    j["mask_clean"] = s.mask_clean;
    j["mask_corrupt"] = s.mask_corrupt;
    if (!s.image.empty()) j["image"] = s.image;
    j["width"] = s.width;
    j["height"] = s.height;
    j["betti_before"] = {s.betti_before.b0, s.betti_before.b1};
    j["betti_after"] = {s.betti_after.b0, s.betti_after.b1};
    json anns = json::array();
    for (const auto& a : s.annotations) anns.push_back(anomaly_to_json(a));
    j["annotations"] = std::move(anns);
    j["seed"] = s.seed;
    return j;
}

inline SampleLine sample_line_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": record is not an object");
    SampleLine s;
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ValidationError(where + ": missing field " + key);
        return j.at(key);
    };
    s.id = need("id").get<std::string>();
    s.source = j.value("source", std::string{});
    s.mask_clean = need("mask_clean").get<std::string>();
    s.mask_corrupt = need("mask_corrupt").get<std::string>();
    s.image = j.value("image", std::string{});
    s.width = need("width").get<int>();
    s.height = need("height").get<int>();
    if (s.width < 1 || s.height < 1) throw ValidationError(where + ": bad dimensions");
    auto pair_of = [&](const char* key) {
        const auto& arr = need(key);
        if (!arr.is_array() || arr.size() != 2) throw ValidationError(where + std::string(": ") + key + " must be [b0, b1]");
        return BettiPair{arr[0].get<int>(), arr[1].get<int>()};
    };
    s.betti_before = pair_of("betti_before");
    s.betti_after = pair_of("betti_after");
    for (const auto& a : need("annotations")) s.annotations.push_back(anomaly_from_json(a, where));
    if (!is_canonically_sorted(s.annotations))
        throw ValidationError(where + ": annotations are not in canonical order");
    s.seed = need("seed").get<std::uint64_t>();

    s.extra = json::object();
    static const char* known[] = {"id", "source", "mask_clean", "mask_corrupt", "image",
                                  "width", "height", "betti_before", "betti_after", "annotations", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool is_known = false;
        for (const char* k : known)
            if (it.key() == k) {
                is_known = true;
                break;
            }
        if (!is_known) s.extra[it.key()] = it.value();
    }
    return s;
}

inline std::vector<SampleLine> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    std::vector<SampleLine> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError(where + ": malformed JSON line " + std::to_string(line_no));
        out.push_back(sample_line_from_json(j, where));
    }
    return out;
}

inline void write_records(std::span<const SampleLine> records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    if (!out) throw IoError(path + ": write failed");
}

/// A record with its masks loaded.
struct LoadedSample {
    SampleLine line;
    Mask clean;
    Mask corrupt;
};

inline std::string resolve_path(const std::string& base_dir, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

inline LoadedSample load_sample(const SampleLine& line, const std::string& base_dir) {
    LoadedSample out{line, read_mask(resolve_path(base_dir, line.mask_clean)),
                     read_mask(resolve_path(base_dir, line.mask_corrupt))};
    if (out.clean.width() != line.width || out.clean.height() != line.height)
        throw ValidationError(line.id + ": clean mask does not match recorded dimensions");
    if (out.corrupt.width() != line.width || out.corrupt.height() != line.height)
        throw ValidationError(line.id + ": corrupted mask does not match recorded dimensions");
    return out;
}

/// One model response keyed by sample id: either raw text or a pre-parsed
/// anomaly list.
struct PredictionLine {
    std::string id;
    std::optional<std::string> response;
    std::optional<std::vector<Anomaly>> anomalies;
};

inline std::vector<PredictionLine> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    std::vector<PredictionLine> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError(where + ": malformed JSON line " + std::to_string(line_no));
        if (!j.is_object() || !j.contains("id")) throw ValidationError(where + ": prediction needs an id");
        PredictionLine p;
        p.id = j["id"].get<std::string>();
        if (j.contains("response")) {
            if (!j["response"].is_string()) throw ValidationError(where + ": response must be a string");
            p.response = j["response"].get<std::string>();
        } else if (j.contains("anomalies")) {
            std::vector<Anomaly> list;
            for (const auto& a : j["anomalies"]) list.push_back(anomaly_from_json(a, where));
            p.anomalies = std::move(list);
        } else {
            throw ValidationError(where + ": prediction needs response text or an anomalies list");
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline void write_predictions(std::span<const PredictionLine> preds, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    for (const auto& p : preds) {
        json j{{"id", p.id}};
        if (p.response) j["response"] = *p.response;
        if (p.anomalies) {
            json arr = json::array();
            for (const auto& a : *p.anomalies) arr.push_back(anomaly_to_json(a));
            j["anomalies"] = std::move(arr);
        }
        out << j.dump() << '\n';
    }
    if (!out) throw IoError(path + ": write failed");
}

}  // namespace topoforge::data
