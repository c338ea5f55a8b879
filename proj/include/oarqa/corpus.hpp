#ifndef OARQA_CORPUS_HPP
#define OARQA_CORPUS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oarqa/nrrd.hpp"
#include "oarqa/pipeline.hpp"
#include "oarqa/synth.hpp"

namespace oarqa {
namespace synth {

namespace detail {

inline std::array<double, 3> triple(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw MalformedConfig(std::string(what) + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace detail

/// Parse phantom cases from JSON:
/// {"cases":[{"case_id","organ","geometry":{"dims","spacing_mm"},
///   "shape":{"type":"sphere"|"cuboid",...},
///   "corruption":{"type":"none"|"erode"|"dilate"|"add_blob"|"delete_slabs"|"translate",...},
///   "expected_category"}]}
inline std::vector<LabeledPhantom> phantoms_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("cases") || !j["cases"].is_array())
        throw MalformedConfig("phantom spec must be an object with a 'cases' array");
    std::vector<LabeledPhantom> out;
    for (const auto& c : j["cases"]) {
        LabeledPhantom lp;
        lp.case_id = c.at("case_id").get<std::string>();
        lp.organ = c.at("organ").get<std::string>();

        const auto& gj = c.at("geometry");
        auto dims = detail::triple(gj.at("dims"), "dims");
        auto sp = detail::triple(gj.at("spacing_mm"), "spacing_mm");
        lp.spec.geometry.dims = {static_cast<std::int64_t>(dims[0]),
                                 static_cast<std::int64_t>(dims[1]),
                                 static_cast<std::int64_t>(dims[2])};
        lp.spec.geometry.spacing_mm = sp;

        const auto& sj = c.at("shape");
        std::string stype = sj.at("type").get<std::string>();
        if (stype == "sphere")
            lp.spec.base_shape = Sphere{detail::triple(sj.at("center_mm"), "center_mm"),
                                        sj.at("radius_mm").get<double>()};
        else if (stype == "cuboid")
            lp.spec.base_shape =
                Cuboid{detail::triple(sj.at("min_corner_mm"), "min_corner_mm"),
                       detail::triple(sj.at("max_corner_mm"), "max_corner_mm")};
        else
            throw MalformedConfig("unknown shape type: " + stype);

        const auto& cj = c.at("corruption");
        std::string ctype = cj.at("type").get<std::string>();
        if (ctype == "none")
            lp.spec.corruption = NoCorruption{};
        else if (ctype == "erode")
            lp.spec.corruption = Erode{cj.at("voxels").get<int>()};
        else if (ctype == "dilate")
            lp.spec.corruption = Dilate{cj.at("voxels").get<int>()};
        else if (ctype == "add_blob")
            lp.spec.corruption = AddBlob{detail::triple(cj.at("center_mm"), "center_mm"),
                                         cj.at("radius_mm").get<double>()};
        else if (ctype == "delete_slabs")
            lp.spec.corruption = DeleteSlabs{cj.at("z_begin").get<std::int64_t>(),
                                             cj.at("z_end").get<std::int64_t>()};
        else if (ctype == "translate") {
            auto o = detail::triple(cj.at("offset_voxels"), "offset_voxels");
            lp.spec.corruption = Translate{{static_cast<std::int64_t>(o[0]),
                                            static_cast<std::int64_t>(o[1]),
                                            static_cast<std::int64_t>(o[2])}};
        } else
            throw MalformedConfig("unknown corruption type: " + ctype);

        auto cat = verdict_category_from_string(c.at("expected_category").get<std::string>());
        if (!cat)
            throw MalformedConfig("unknown expected_category for case " + lp.case_id);
        lp.expected_category = *cat;
        out.push_back(std::move(lp));
    }
    return out;
}

/// Rasterize, verify and write a labeled corpus as NRRD pairs plus a
/// manifest CSV (with the expected_category column). Returns the manifest
/// path. Deterministic for a fixed phantom list.
inline std::string write_corpus(const std::vector<LabeledPhantom>& phantoms,
                                const std::string& out_dir,
                                const std::map<std::string, OrganThresholds>& thresholds,
                                NrrdEncoding encoding = NrrdEncoding::Gzip) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<ManifestRow> rows;
    for (const auto& lp : phantoms) {
        auto t = lookup_thresholds(thresholds, lp.organ);
        if (!t)
            throw MalformedConfig("no thresholds for organ '" + lp.organ + "'");
        PhantomPair pair = generate_verified(lp, *t);
        std::string pred_name = lp.case_id + "_pred.nrrd";
        std::string gt_name = lp.case_id + "_gt.nrrd";
        write_nrrd(pair.pred, (fs::path(out_dir) / pred_name).string(), encoding);
        write_nrrd(pair.gt, (fs::path(out_dir) / gt_name).string(), encoding);
        ManifestRow r;
        r.case_id = lp.case_id;
        r.organ = lp.organ;
        r.pred_path = pred_name;  // relative to the manifest directory
        r.gt_path = gt_name;
        r.expected_category = to_string(lp.expected_category);
        rows.push_back(std::move(r));
    }
    std::string manifest = (fs::path(out_dir) / "manifest.csv").string();
    write_manifest(rows, manifest);
    return manifest;
}

} // namespace synth
} // namespace oarqa

#endif // OARQA_CORPUS_HPP
