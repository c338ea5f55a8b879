// oarqa: segmentation QA triage over NRRD mask pairs.
//
// Exit codes: 0 = ran, no failure candidates; 1 = ran, >=1 failure
// candidate; 2 = usage/config error; 3 = I/O or data error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oarqa/classifier.hpp"
#include "oarqa/corpus.hpp"
#include "oarqa/metrics.hpp"
#include "oarqa/nrrd.hpp"
#include "oarqa/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCandidates = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::map<std::string, oarqa::OrganThresholds> resolve_thresholds(const std::string& config) {
    std::string path = config;
    if (path.empty()) {
        const char* env = std::getenv("OARQA_CONFIG");
        if (env && *env) path = env;
    }
    if (path.empty()) return oarqa::default_thresholds();
    return oarqa::load_thresholds_file(path);
}

int run_evaluate(const std::string& pred, const std::string& gt, const std::string& organ,
                 const std::string& config) {
    auto table = resolve_thresholds(config);
    auto t = oarqa::lookup_thresholds(table, organ);
    if (!t) {
        std::cerr << "no thresholds for organ '" << organ << "'\n";
        return kExitUsage;
    }
    oarqa::CaseRecord rec = oarqa::evaluate_case(pred, gt, organ, *t);
    if (rec.is_error()) {
        std::cerr << rec.error << "\n";
        return kExitData;
    }
    for (const auto& w : rec.warnings) std::cerr << "warning: " << w << "\n";
    const auto& m = *rec.metrics;
    std::printf("case: %s\norgan: %s\ndice %.6f, hd %.6f mm (pred->gt %.6f, gt->pred %.6f)\n",
                rec.case_id.c_str(), organ.c_str(), m.dice, m.hd_mm, m.hd_pred_to_gt_mm,
                m.hd_gt_to_pred_mm);
    std::printf("verdict %s: %s\n", oarqa::to_string(rec.verdict->category),
                rec.verdict->rationale.c_str());
    return rec.verdict->is_failure_candidate ? kExitCandidates : kExitOk;
}

int run_batch(const std::string& manifest, const std::string& config, const std::string& out,
              const std::string& format, unsigned jobs) {
    auto table = resolve_thresholds(config);
    auto rows = oarqa::parse_manifest(manifest);
    oarqa::BatchReport rep = oarqa::batch_evaluate(rows, table, jobs);

    if (!out.empty()) {
        oarqa::ReportFormat f =
            format == "csv" ? oarqa::ReportFormat::Csv : oarqa::ReportFormat::Json;
        oarqa::write_report(rep, f, out);
    }

    std::int64_t errors = 0;
    for (const auto& r : rep.records) errors += r.is_error();
    std::printf("%zu cases, %zu failure candidates, %lld errors\n", rep.records.size(),
                rep.candidates.size(), static_cast<long long>(errors));
    for (const auto& [organ, s] : rep.per_organ) {
        std::printf("  %-12s total %lld  mean dice %.4f  max hd %.2f mm\n", organ.c_str(),
                    static_cast<long long>(s.total), s.mean_dice, s.max_hd_mm);
    }
    for (std::size_t i : rep.candidates) {
        const auto& r = rep.records[i];
        std::printf("  candidate %s (%s): %s\n", r.case_id.c_str(), r.organ.c_str(),
                    oarqa::to_string(r.verdict->category));
    }
    if (errors > 0) {
        for (const auto& r : rep.records)
            if (r.is_error()) std::cerr << r.error << "\n";
        return kExitData;
    }
    return rep.candidates.empty() ? kExitOk : kExitCandidates;
}

int run_synth(const std::string& spec_path, bool default_corpus, const std::string& out_dir) {
    std::vector<oarqa::synth::LabeledPhantom> phantoms;
    if (default_corpus) {
        phantoms = oarqa::synth::default_corpus();
    } else {
        std::ifstream in(spec_path);
        if (!in) {
            std::cerr << "cannot open spec " << spec_path << "\n";
            return kExitData;
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "spec parse error: " << e.what() << "\n";
            return kExitUsage;
        }
        phantoms = oarqa::synth::phantoms_from_json(j);
    }
    std::string manifest =
        oarqa::synth::write_corpus(phantoms, out_dir, oarqa::default_thresholds());
    std::printf("wrote %zu cases, manifest %s\n", phantoms.size(), manifest.c_str());
    return kExitOk;
}

int run_thresholds(bool print, const std::string& validate_path) {
    if (print) {
        std::cout << oarqa::thresholds_to_json(oarqa::default_thresholds()).dump(2) << "\n";
        return kExitOk;
    }
    auto table = oarqa::load_thresholds_file(validate_path);
    std::printf("%s: valid (%zu organs, fingerprint %s)\n", validate_path.c_str(), table.size(),
                oarqa::config_fingerprint(table).c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmentation QA: Dice/Hausdorff triage of predicted vs ground-truth masks"};
    app.require_subcommand(1);

    std::string pred, gt, organ, config;
    auto* eval = app.add_subcommand("evaluate", "Evaluate one prediction/ground-truth pair");
    eval->add_option("--pred", pred, "Predicted mask (NRRD)")->required();
    eval->add_option("--gt", gt, "Ground-truth mask (NRRD)")->required();
    eval->add_option("--organ", organ, "Organ name for threshold lookup")->required();
    eval->add_option("--config", config, "Threshold config JSON (default: $OARQA_CONFIG)");

    std::string manifest, out, format = "json";
    unsigned jobs = 1;
    auto* batch = app.add_subcommand("batch", "Evaluate a manifest of cases");
    batch->add_option("--manifest", manifest, "Manifest CSV")->required();
    batch->add_option("--config", config, "Threshold config JSON (default: $OARQA_CONFIG)");
    batch->add_option("--out", out, "Report output path");
    batch->add_option("--format", format, "Report format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    batch->add_option("--jobs", jobs, "Worker threads");

    std::string spec_path, out_dir;
    bool default_corpus = false;
    auto* synth = app.add_subcommand("synth", "Generate labeled phantom fixtures");
    synth->add_option("--spec", spec_path, "Phantom spec JSON");
    synth->add_flag("--default-corpus", default_corpus,
                    "Generate the built-in 120-case corpus (20 per organ)");
    synth->add_option("--out-dir", out_dir, "Output directory")->required();

    bool print_defaults = false;
    std::string validate_path;
    auto* thr = app.add_subcommand("thresholds", "Print or validate threshold configs");
    thr->add_flag("--print", print_defaults, "Print the built-in per-organ thresholds");
    thr->add_option("--validate", validate_path, "Validate a threshold config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*eval) return run_evaluate(pred, gt, organ, config);
        if (*batch) return run_batch(manifest, config, out, format, jobs);
        if (*synth) {
            if (default_corpus == !spec_path.empty()) {
                std::cerr << "synth requires exactly one of --spec / --default-corpus\n";
                return kExitUsage;
            }
            return run_synth(spec_path, default_corpus, out_dir);
        }
        if (*thr) {
            if (print_defaults == !validate_path.empty()) {
                std::cerr << "thresholds requires exactly one of --print / --validate\n";
                return kExitUsage;
            }
            return run_thresholds(print_defaults, validate_path);
        }
    } catch (const oarqa::MalformedConfig& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const oarqa::InvariantViolation& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const oarqa::InvalidThresholds& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
