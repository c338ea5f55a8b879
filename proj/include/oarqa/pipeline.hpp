#ifndef OARQA_PIPELINE_HPP
#define OARQA_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>

#include "oarqa/classifier.hpp"
#include "oarqa/errors.hpp"
#include "oarqa/metrics.hpp"
#include "oarqa/nrrd.hpp"

namespace oarqa {

struct ManifestRow {
    std::string case_id;
    std::string organ;
    std::string pred_path;
    std::string gt_path;
    std::string expected_category;  // optional, written by the synth command
};

struct CaseRecord {
    std::string case_id;
    std::string organ;
    std::string pred_path;
    std::string gt_path;
    std::optional<MetricResult> metrics;
    std::optional<CaseVerdict> verdict;
    OrganThresholds thresholds;     // the thresholds this case was judged by
    std::vector<std::string> warnings;
    std::string error;              // nonempty for error records
    std::int64_t wall_time_ms = 0;

    bool is_error() const { return !error.empty(); }
    bool is_failure_candidate() const { return verdict && verdict->is_failure_candidate; }
};

struct OrganSummary {
    std::map<std::string, std::int64_t> category_counts;
    std::int64_t total = 0;
    std::int64_t errors = 0;
    double mean_dice = 0.0;
    double max_hd_mm = 0.0;
};

struct BatchReport {
    std::vector<CaseRecord> records;
    std::map<std::string, OrganSummary> per_organ;
    std::vector<std::size_t> candidates;  // indices into records, severity order
    std::string config_fingerprint;
};

// ---- CSV helpers ----

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else
                    quoted = false;
            } else
                field.push_back(c);
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

inline std::string format_sig6(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// 6-significant-digit JSON value; infinities become the string "inf".
inline nlohmann::json num6(double v) {
    if (std::isinf(v)) return "inf";
    return std::stod(format_sig6(v));
}

inline double parse_num6(const nlohmann::json& j) {
    if (j.is_string() && j.get<std::string>() == "inf")
        return kInfiniteDistance;
    return j.get<double>();
}

} // namespace detail

/// Parse a manifest CSV. Header `case_id,organ,pred_path,gt_path` with an
/// optional trailing `expected_category` column; relative paths are resolved
/// against the manifest's directory.
inline std::vector<ManifestRow> parse_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    std::string line;
    if (!std::getline(in, line))
        throw MalformedManifest("manifest is empty (missing header)");
    auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "case_id" || header[1] != "organ" ||
        header[2] != "pred_path" || header[3] != "gt_path")
        throw MalformedManifest("manifest header must start with case_id,organ,pred_path,gt_path");
    bool has_expected = header.size() >= 5 && header[4] == "expected_category";

    std::vector<ManifestRow> rows;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() < 4)
            throw MalformedManifest("manifest line " + std::to_string(lineno) +
                                    ": expected at least 4 fields");
        ManifestRow r;
        r.case_id = fields[0];
        r.organ = fields[1];
        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        r.pred_path = resolve(fields[2]);
        r.gt_path = resolve(fields[3]);
        if (has_expected && fields.size() >= 5) r.expected_category = fields[4];
        if (r.case_id.empty())
            throw MalformedManifest("manifest line " + std::to_string(lineno) +
                                    ": empty case_id");
        if (!seen.insert(r.case_id).second)
            throw MalformedManifest("duplicate case_id '" + r.case_id + "'");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write manifest " + path);
    out << "case_id,organ,pred_path,gt_path,expected_category\n";
    for (const auto& r : rows)
        out << r.case_id << "," << r.organ << "," << r.pred_path << "," << r.gt_path << ","
            << r.expected_category << "\n";
}

/// Stable SHA-256 over the canonicalized threshold map, lowercase hex.
inline std::string config_fingerprint(const std::map<std::string, OrganThresholds>& table) {
    std::ostringstream canon;
    for (const auto& [key, t] : table) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s:%.17g:%.17g:%.17g:%.17g\n", key.c_str(),
                      t.dice_good, t.dice_bad, t.hd_near_mm, t.hd_far_mm);
        canon << buf;
    }
    std::string s = canon.str();
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(s.data()), s.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

/// Load, validate, measure and classify one prediction/ground-truth pair.
/// Failures become error records, never exceptions.
inline CaseRecord evaluate_case(const std::string& pred_path, const std::string& gt_path,
                                const std::string& organ, const OrganThresholds& thresholds,
                                const std::string& case_id = "") {
    CaseRecord rec;
    rec.case_id = case_id.empty() ? pred_path : case_id;
    rec.organ = organ;
    rec.pred_path = pred_path;
    rec.gt_path = gt_path;
    rec.thresholds = thresholds;
    auto start = std::chrono::steady_clock::now();
    try {
        MaskVolume pred = read_nrrd(pred_path);
        MaskVolume gt = read_nrrd(gt_path);
        for (const auto& w : pred.warnings()) rec.warnings.push_back("pred: " + w);
        for (const auto& w : gt.warnings()) rec.warnings.push_back("gt: " + w);
        MetricResult m = evaluate_metrics(pred, gt);
        rec.verdict = classify(m, thresholds, m.flag);
        rec.metrics = std::move(m);
    } catch (const std::exception& e) {
        rec.error = std::string("case '") + rec.case_id + "': " + e.what();
    }
    rec.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    return rec;
}

inline int severity_rank(VerdictCategory c) {
    switch (c) {
        case VerdictCategory::EmptyPrediction:
        case VerdictCategory::EmptyGroundTruth: return 0;
        case VerdictCategory::MixedFailure: return 1;
        case VerdictCategory::OversegFar: return 2;
        case VerdictCategory::Underseg: return 3;
        case VerdictCategory::OversegNear: return 4;
        case VerdictCategory::Borderline: return 5;
        default: return 6;
    }
}

/// Failure candidates ordered worst-first: severity class, then dice deficit
/// (dice_good - dice) descending, then hd descending; stable for ties.
inline std::vector<std::size_t> rank_candidates(const std::vector<CaseRecord>& records) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].is_failure_candidate()) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const CaseRecord& ra = records[a];
        const CaseRecord& rb = records[b];
        int sa = severity_rank(ra.verdict->category);
        int sb = severity_rank(rb.verdict->category);
        if (sa != sb) return sa < sb;
        double da = ra.metrics ? ra.thresholds.dice_good - ra.metrics->dice : 0.0;
        double db = rb.metrics ? rb.thresholds.dice_good - rb.metrics->dice : 0.0;
        if (da != db) return da > db;
        double ha = ra.metrics ? ra.metrics->hd_mm : 0.0;
        double hb = rb.metrics ? rb.metrics->hd_mm : 0.0;
        if (ha != hb) return ha > hb;
        return false;
    });
    return idx;
}

inline BatchReport assemble_report(std::vector<CaseRecord> records,
                                   const std::map<std::string, OrganThresholds>& thresholds) {
    BatchReport rep;
    rep.records = std::move(records);
    rep.config_fingerprint = config_fingerprint(thresholds);
    for (const auto& r : rep.records) {
        OrganSummary& s = rep.per_organ[normalize_organ(r.organ)];
        s.total += 1;
        if (r.is_error()) {
            s.errors += 1;
            continue;
        }
        s.category_counts[to_string(r.verdict->category)] += 1;
        if (r.metrics) {
            s.mean_dice += r.metrics->dice;
            if (!std::isinf(r.metrics->hd_mm)) s.max_hd_mm = std::max(s.max_hd_mm, r.metrics->hd_mm);
        }
    }
    for (auto& [organ, s] : rep.per_organ) {
        std::int64_t n = s.total - s.errors;
        if (n > 0) s.mean_dice /= static_cast<double>(n);
    }
    rep.candidates = rank_candidates(rep.records);
    return rep;
}

/// Evaluate every manifest row. Records keep manifest order regardless of
/// the number of worker threads.
inline BatchReport batch_evaluate(const std::vector<ManifestRow>& rows,
                                  const std::map<std::string, OrganThresholds>& thresholds,
                                  unsigned parallelism = 1) {
    if (parallelism == 0) parallelism = 1;
    std::vector<CaseRecord> records(rows.size());
    auto work = [&](std::size_t i) {
        const ManifestRow& r = rows[i];
        auto t = lookup_thresholds(thresholds, r.organ);
        if (!t) {
            CaseRecord rec;
            rec.case_id = r.case_id;
            rec.organ = r.organ;
            rec.pred_path = r.pred_path;
            rec.gt_path = r.gt_path;
            rec.error = "case '" + r.case_id + "': no thresholds for organ '" + r.organ + "'";
            records[i] = std::move(rec);
            return;
        }
        records[i] = evaluate_case(r.pred_path, r.gt_path, r.organ, *t, r.case_id);
    };
    if (parallelism == 1 || rows.size() <= 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        unsigned n = std::min<std::size_t>(parallelism, rows.size());
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
                    work(i);
            });
        for (auto& th : pool) th.join();
    }
    return assemble_report(std::move(records), thresholds);
}

// ---- Report serialization ----

inline nlohmann::json report_to_json(const BatchReport& rep) {
    nlohmann::json j;
    j["config_fingerprint"] = rep.config_fingerprint;
    j["records"] = nlohmann::json::array();
    for (const auto& r : rep.records) {
        nlohmann::json rj;
        rj["case_id"] = r.case_id;
        rj["organ"] = r.organ;
        rj["pred_path"] = r.pred_path;
        rj["gt_path"] = r.gt_path;
        rj["warnings"] = r.warnings;
        if (r.is_error()) {
            rj["error"] = r.error;
        } else {
            const MetricResult& m = *r.metrics;
            nlohmann::json mj;
            mj["dice"] = detail::num6(m.dice);
            mj["hd_mm"] = detail::num6(m.hd_mm);
            mj["hd_pred_to_gt_mm"] = detail::num6(m.hd_pred_to_gt_mm);
            mj["hd_gt_to_pred_mm"] = detail::num6(m.hd_gt_to_pred_mm);
            mj["pred_volume_mm3"] = detail::num6(m.pred_volume_mm3);
            mj["gt_volume_mm3"] = detail::num6(m.gt_volume_mm3);
            mj["components"] = nlohmann::json::array();
            for (const auto& c : m.components)
                mj["components"].push_back({{"component_id", c.component_id},
                                            {"voxel_count", c.voxel_count},
                                            {"min_distance_to_gt_mm",
                                             detail::num6(c.min_distance_to_gt_mm)}});
            rj["metrics"] = mj;
            rj["verdict"] = {{"category", to_string(r.verdict->category)},
                             {"is_failure_candidate", r.verdict->is_failure_candidate},
                             {"rationale", r.verdict->rationale}};
        }
        j["records"].push_back(rj);
    }
    j["summary"] = nlohmann::json::object();
    for (const auto& [organ, s] : rep.per_organ) {
        j["summary"][organ] = {{"total", s.total},
                               {"errors", s.errors},
                               {"category_counts", s.category_counts},
                               {"mean_dice", detail::num6(s.mean_dice)},
                               {"max_hd_mm", detail::num6(s.max_hd_mm)}};
    }
    j["candidates"] = nlohmann::json::array();
    for (std::size_t i : rep.candidates) j["candidates"].push_back(rep.records[i].case_id);
    return j;
}

inline std::string report_to_csv(const BatchReport& rep) {
    std::ostringstream out;
    out << "case_id,organ,dice,hd_mm,hd_pred_to_gt_mm,hd_gt_to_pred_mm,category,"
           "is_failure_candidate\n";
    for (const auto& r : rep.records) {
        out << r.case_id << "," << r.organ << ",";
        if (r.is_error()) {
            out << ",,,,error,\n";
            continue;
        }
        const MetricResult& m = *r.metrics;
        out << detail::format_sig6(m.dice) << "," << detail::format_sig6(m.hd_mm) << ","
            << detail::format_sig6(m.hd_pred_to_gt_mm) << ","
            << detail::format_sig6(m.hd_gt_to_pred_mm) << "," << to_string(r.verdict->category)
            << "," << (r.verdict->is_failure_candidate ? "true" : "false") << "\n";
    }
    return out.str();
}

enum class ReportFormat { Json, Csv };

inline void write_report(const BatchReport& rep, ReportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write report " + path);
    if (format == ReportFormat::Json)
        out << report_to_json(rep).dump(2) << "\n";
    else
        out << report_to_csv(rep);
    if (!out)
        throw IoError("report write failed: " + path);
}

} // namespace oarqa

#endif // OARQA_PIPELINE_HPP
