#ifndef OARQA_CLASSIFIER_HPP
#define OARQA_CLASSIFIER_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oarqa/errors.hpp"
#include "oarqa/metrics.hpp"

namespace oarqa {

struct OrganThresholds {
    std::string organ;
    double dice_good = 0.0;   // dice >= dice_good counts as good overlap
    double dice_bad = 0.0;    // dice < dice_bad counts as failed overlap
    double hd_near_mm = 0.0;  // hd <= hd_near is "close to GT"
    double hd_far_mm = 0.0;   // hd > hd_far is "far from respective organ"

    void validate() const {
        auto fail = [&](const std::string& what) {
            throw InvalidThresholds("thresholds for '" + organ + "': " + what);
        };
        if (!(dice_good > 0.0) || dice_good > 1.0 || !std::isfinite(dice_good))
            fail("dice_good must be in (0,1]");
        if (dice_bad < 0.0 || !(dice_bad < dice_good))
            fail("dice_bad must be in [0, dice_good)");
        if (!(hd_near_mm > 0.0) || !std::isfinite(hd_near_mm))
            fail("hd_near_mm must be positive and finite");
        if (!(hd_far_mm > hd_near_mm) || !std::isfinite(hd_far_mm))
            fail("hd_far_mm must exceed hd_near_mm");
    }
};

enum class VerdictCategory {
    Good,
    OversegNear,
    OversegFar,
    MixedFailure,
    Underseg,
    Borderline,
    EmptyPrediction,
    EmptyGroundTruth,
    BothEmpty,
};

inline const char* to_string(VerdictCategory c) {
    switch (c) {
        case VerdictCategory::Good: return "Good";
        case VerdictCategory::OversegNear: return "OversegNear";
        case VerdictCategory::OversegFar: return "OversegFar";
        case VerdictCategory::MixedFailure: return "MixedFailure";
        case VerdictCategory::Underseg: return "Underseg";
        case VerdictCategory::Borderline: return "Borderline";
        case VerdictCategory::EmptyPrediction: return "EmptyPrediction";
        case VerdictCategory::EmptyGroundTruth: return "EmptyGroundTruth";
        case VerdictCategory::BothEmpty: return "BothEmpty";
    }
    return "?";
}

inline std::optional<VerdictCategory> verdict_category_from_string(const std::string& s) {
    static const std::map<std::string, VerdictCategory> table = {
        {"Good", VerdictCategory::Good},
        {"OversegNear", VerdictCategory::OversegNear},
        {"OversegFar", VerdictCategory::OversegFar},
        {"MixedFailure", VerdictCategory::MixedFailure},
        {"Underseg", VerdictCategory::Underseg},
        {"Borderline", VerdictCategory::Borderline},
        {"EmptyPrediction", VerdictCategory::EmptyPrediction},
        {"EmptyGroundTruth", VerdictCategory::EmptyGroundTruth},
        {"BothEmpty", VerdictCategory::BothEmpty},
    };
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

struct CaseVerdict {
    VerdictCategory category = VerdictCategory::Good;
    bool is_failure_candidate = false;
    std::string rationale;
};

inline std::string normalize_organ(const std::string& name) {
    std::string out;
    for (char c : name)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

/// Built-in registry for the six organs. dice_good and hd_near_mm are the
/// published per-organ acceptance thresholds; dice_bad = dice_good - 0.1 and
/// hd_far_mm = 100 mm generalize the breast banding and are configurable.
inline std::map<std::string, OrganThresholds> default_thresholds() {
    auto mk = [](const char* organ, double dg, double db, double hn, double hf) {
        OrganThresholds t{organ, dg, db, hn, hf};
        t.validate();
        return std::pair<std::string, OrganThresholds>(normalize_organ(organ), t);
    };
    return {
        mk("Breast", 0.9, 0.8, 6.0, 100.0),
        mk("LymphNode", 0.95, 0.85, 0.5, 100.0),
        mk("Femur", 0.9, 0.8, 11.0, 100.0),
        mk("Trachea", 0.85, 0.75, 19.0, 100.0),
        mk("Chiasma", 0.66, 0.56, 3.4, 100.0),
        mk("Brainstem", 0.8, 0.7, 10.0, 100.0),
    };
}

inline std::optional<OrganThresholds> lookup_thresholds(
    const std::map<std::string, OrganThresholds>& table, const std::string& organ) {
    auto it = table.find(normalize_organ(organ));
    if (it == table.end()) return std::nullopt;
    return it->second;
}

/// Five-way banding over (dice, hd), degenerate flags short-circuit.
/// Band boundaries are closed on the good side: dice == dice_good is good
/// overlap, hd == hd_near_mm is near, hd == hd_far_mm is still OversegNear.
inline CaseVerdict classify(const MetricResult& m, const OrganThresholds& t,
                            PairFlag degenerate = PairFlag::Ok) {
    t.validate();
    CaseVerdict v;
    auto set = [&](VerdictCategory c, std::string why) {
        v.category = c;
        v.rationale = std::move(why);
        v.is_failure_candidate =
            c != VerdictCategory::Good && c != VerdictCategory::BothEmpty;
    };

    switch (degenerate) {
        case PairFlag::BothEmpty:
            set(VerdictCategory::BothEmpty, "both masks empty; nothing to segment");
            return v;
        case PairFlag::EmptyPrediction:
            set(VerdictCategory::EmptyPrediction, "prediction contains no foreground");
            return v;
        case PairFlag::EmptyGroundTruth:
            set(VerdictCategory::EmptyGroundTruth, "ground truth contains no foreground");
            return v;
        case PairFlag::Ok:
            break;
    }

    const double d = m.dice;
    const double hd = m.hd_mm;
    if (d >= t.dice_good) {
        if (hd <= t.hd_near_mm)
            set(VerdictCategory::Good, "good prediction: high overlap, surfaces close");
        else if (hd <= t.hd_far_mm)
            set(VerdictCategory::OversegNear,
                "good overlap but extra predictions connected and close to GT");
        else
            set(VerdictCategory::OversegFar,
                "good overlap but extra predictions far from respective organ");
    } else if (d < t.dice_bad) {
        if (hd > t.hd_near_mm)
            set(VerdictCategory::MixedFailure,
                "extra predictions in slices or far from organ with lacking overlap for "
                "some ground truth contours");
        else
            set(VerdictCategory::Underseg,
                "no extra predictions but missing predicted contours for some GT slices");
    } else {
        set(VerdictCategory::Borderline,
            "dice between the bad and good thresholds; flagged for review");
    }
    return v;
}

/// Defaults overlaid with JSON overrides. Keys are organ names (matched
/// case-insensitively); values may set any of dice_good, dice_bad,
/// hd_near_mm, hd_far_mm. Unknown value keys are rejected.
inline std::map<std::string, OrganThresholds> load_thresholds(const nlohmann::json& config) {
    if (!config.is_object())
        throw MalformedConfig("threshold config must be a JSON object");
    auto table = default_thresholds();
    for (auto it = config.begin(); it != config.end(); ++it) {
        const std::string key = normalize_organ(it.key());
        const nlohmann::json& entry = it.value();
        if (!entry.is_object())
            throw MalformedConfig("entry for '" + it.key() + "' must be an object");
        OrganThresholds t;
        auto found = table.find(key);
        if (found != table.end()) {
            t = found->second;
        } else {
            t.organ = it.key();
            // new organs must specify the full quartet
            for (const char* f : {"dice_good", "dice_bad", "hd_near_mm", "hd_far_mm"})
                if (!entry.contains(f))
                    throw MalformedConfig("new organ '" + it.key() + "' must define " + f);
        }
        for (auto fit = entry.begin(); fit != entry.end(); ++fit) {
            const std::string& f = fit.key();
            if (!fit.value().is_number())
                throw MalformedConfig("field '" + f + "' of '" + it.key() +
                                      "' must be a number");
            double val = fit.value().get<double>();
            if (f == "dice_good")
                t.dice_good = val;
            else if (f == "dice_bad")
                t.dice_bad = val;
            else if (f == "hd_near_mm")
                t.hd_near_mm = val;
            else if (f == "hd_far_mm")
                t.hd_far_mm = val;
            else
                throw MalformedConfig("unknown field '" + f + "' for organ '" + it.key() + "'");
        }
        try {
            t.validate();
        } catch (const InvalidThresholds& e) {
            throw InvariantViolation(e.what());
        }
        table[key] = t;
    }
    return table;
}

inline std::map<std::string, OrganThresholds> load_thresholds_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open threshold config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedConfig(std::string("threshold config parse error: ") + e.what());
    }
    return load_thresholds(j);
}

inline nlohmann::json thresholds_to_json(const std::map<std::string, OrganThresholds>& table) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, t] : table) {
        j[t.organ] = {{"dice_good", t.dice_good},
                      {"dice_bad", t.dice_bad},
                      {"hd_near_mm", t.hd_near_mm},
                      {"hd_far_mm", t.hd_far_mm}};
    }
    return j;
}

} // namespace oarqa

#endif // OARQA_CLASSIFIER_HPP
