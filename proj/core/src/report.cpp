#include "eplab/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace eplab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

ordered_json seed_to_json(const SeedReport& s) {
    ordered_json j;
    j["seed"] = s.seed;
    j["set"] = s.criterion_set;
    j["member"] = s.criterion.member;
    j["t_star"] = s.criterion.t_star ? ordered_json(*s.criterion.t_star)
                                     : ordered_json(nullptr);
    ordered_json margins = ordered_json::array();
    for (const auto& [label, slack] : s.criterion.margins)
        margins.push_back({{"label", label}, {"slack", slack}});
    j["margins"] = std::move(margins);
    j["failed"] = s.criterion.failed;
    j["window"] = s.criterion.window ? ordered_json(*s.criterion.window)
                                     : ordered_json(nullptr);
    j["t_detect"] = s.t_detect ? ordered_json(*s.t_detect) : ordered_json(nullptr);
    j["detect_method"] =
        s.detect_method ? ordered_json(*s.detect_method) : ordered_json(nullptr);
    j["bound_satisfied"] = s.bound_satisfied ? ordered_json(*s.bound_satisfied)
                                             : ordered_json(nullptr);
    j["violations"] = s.violations;
    j["terminated"] = s.terminated;
    if (s.cross_val_max_rel_rho || s.cross_val_max_rel_d) {
        ordered_json cv;
        cv["max_rel_rho"] = s.cross_val_max_rel_rho
                                ? ordered_json(*s.cross_val_max_rel_rho)
                                : ordered_json(nullptr);
        cv["max_rel_d"] = s.cross_val_max_rel_d
                              ? ordered_json(*s.cross_val_max_rel_d)
                              : ordered_json(nullptr);
        j["cross_validation"] = std::move(cv);
    }
    return j;
}

SeedReport seed_from_json(const ordered_json& j) {
    SeedReport s;
    s.seed = j.at("seed").get<double>();
    s.criterion_set = j.at("set").get<std::string>();
    s.criterion.member = j.at("member").get<bool>();
    if (!j.at("t_star").is_null())
        s.criterion.t_star = j.at("t_star").get<double>();
    for (const auto& m : j.at("margins"))
        s.criterion.margins.emplace_back(m.at("label").get<std::string>(),
                                         m.at("slack").get<double>());
    s.criterion.failed = j.at("failed").get<std::vector<std::string>>();
    if (!j.at("window").is_null())
        s.criterion.window = j.at("window").get<double>();
    if (!j.at("t_detect").is_null()) s.t_detect = j.at("t_detect").get<double>();
    if (!j.at("detect_method").is_null())
        s.detect_method = j.at("detect_method").get<std::string>();
    if (!j.at("bound_satisfied").is_null())
        s.bound_satisfied = j.at("bound_satisfied").get<bool>();
    s.violations = j.at("violations").get<std::size_t>();
    s.terminated = j.at("terminated").get<std::string>();
    if (j.contains("cross_validation")) {
        const auto& cv = j.at("cross_validation");
        if (!cv.at("max_rel_rho").is_null())
            s.cross_val_max_rel_rho = cv.at("max_rel_rho").get<double>();
        if (!cv.at("max_rel_d").is_null())
            s.cross_val_max_rel_d = cv.at("max_rel_d").get<double>();
    }
    return s;
}

std::string emit_text(const RunSummary& summary) {
    std::ostringstream out;
    if (summary.timestamp) out << "# generated " << *summary.timestamp << "\n";
    out << "run summary: system=" << summary.system
        << " mode=" << summary.mode << "\n";
    if (summary.seeds.empty()) {
        out << "(no seeds)\n";
    } else {
        for (const SeedReport& s : summary.seeds) {
            out << "seed=" << fmt("%.4f", s.seed) << "  set=" << s.criterion_set
                << "  member=" << (s.criterion.member ? "yes" : "no")
                << "  t*="
                << (s.criterion.t_star ? fmt("%.4f", *s.criterion.t_star) : "-")
                << "  t_detect="
                << (s.t_detect ? fmt("%.6f", *s.t_detect) : "-") << "  bound="
                << (s.bound_satisfied ? (*s.bound_satisfied ? "PASS" : "FAIL")
                                      : "-")
                << "  violations=" << s.violations
                << "  terminated=" << s.terminated;
            if (s.criterion.window)
                out << "  window=" << fmt("%.4f", *s.criterion.window);
            if (s.cross_val_max_rel_rho)
                out << "  xval_rho=" << fmt("%.3e", *s.cross_val_max_rel_rho);
            if (s.cross_val_max_rel_d)
                out << "  xval_d=" << fmt("%.3e", *s.cross_val_max_rel_d);
            out << "\n";
            if (!s.criterion.margins.empty()) {
                out << "    margins:";
                for (const auto& [label, slack] : s.criterion.margins)
                    out << " " << label << "=" << fmt("%+.6g", slack);
                out << "\n";
            }
            if (!s.criterion.failed.empty()) {
                out << "    failed:";
                for (const std::string& f : s.criterion.failed) out << " " << f;
                out << "\n";
            }
        }
    }
    if (summary.riccati_max_abs_err)
        out << "riccati max abs err vs closed form: "
            << fmt("%.3e", *summary.riccati_max_abs_err) << "\n";
    if (!summary.files.empty()) {
        out << "files:";
        for (const std::string& f : summary.files) out << " " << f;
        out << "\n";
    }
    return out.str();
}

}  // namespace

std::string emit_report(const RunSummary& summary, ReportFormat format) {
    if (format == ReportFormat::text) return emit_text(summary);

    ordered_json j;
    if (summary.timestamp) j["timestamp"] = *summary.timestamp;
    j["system"] = summary.system;
    j["mode"] = summary.mode;
    j["config"] = summary.config;
    ordered_json seeds = ordered_json::array();
    for (const SeedReport& s : summary.seeds) seeds.push_back(seed_to_json(s));
    j["seeds"] = std::move(seeds);
    if (summary.riccati_max_abs_err)
        j["riccati_max_abs_err"] = *summary.riccati_max_abs_err;
    j["files"] = summary.files;
    return j.dump(2) + "\n";
}

RunSummary parse_summary_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw parse_error(std::string("summary json: ") + e.what());
    }
    try {
        RunSummary s;
        if (j.contains("timestamp"))
            s.timestamp = j.at("timestamp").get<std::string>();
        s.system = j.at("system").get<std::string>();
        s.mode = j.at("mode").get<std::string>();
        s.config = j.at("config").get<std::string>();
        for (const auto& sj : j.at("seeds")) s.seeds.push_back(seed_from_json(sj));
        if (j.contains("riccati_max_abs_err"))
            s.riccati_max_abs_err = j.at("riccati_max_abs_err").get<double>();
        s.files = j.at("files").get<std::vector<std::string>>();
        return s;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception& e) {
        throw parse_error(std::string("summary json: ") + e.what());
    }
}

}  // namespace eplab
