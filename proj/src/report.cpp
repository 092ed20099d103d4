#include "mrh/report.hpp"

#include <json.hpp>

namespace mrh {

const char* to_string(Constraint c) {
    switch (c) {
        case Constraint::None: return "none";
        case Constraint::M: return "M";
        case Constraint::M1: return "m1";
        case Constraint::M_M1: return "M_m1";
    }
    return "?";
}

const char* to_string(Metric m) {
    return m == Metric::Adapted ? "adapted" : "standard";
}

std::optional<Constraint> constraint_from_string(const std::string& s) {
    if (s == "none") return Constraint::None;
    if (s == "M") return Constraint::M;
    if (s == "m1") return Constraint::M1;
    if (s == "M_m1") return Constraint::M_M1;
    return std::nullopt;
}

std::optional<Metric> metric_from_string(const std::string& s) {
    if (s == "adapted") return Metric::Adapted;
    if (s == "standard") return Metric::Standard;
    return std::nullopt;
}

namespace {

nlohmann::json hedge_to_json(const HedgeFunction& h) {
    nlohmann::json j;
    j["grid"] = {{"lo", h.grid.lo}, {"hi", h.grid.hi}, {"n", h.grid.n}};
    j["values"] = h.values;
    return j;
}

}  // namespace

std::string report_to_json(const SensitivityReport& r) {
    nlohmann::json j;
    j["constraint"] = to_string(r.constraint);
    j["metric"] = to_string(r.metric);
    j["p"] = r.p;
    j["value"] = r.value;
    j["diagnostics"] = {{"foc_residual", r.diagnostics.foc_residual},
                        {"mc_stderr", r.diagnostics.mc_stderr},
                        {"quad_error", r.diagnostics.quad_error},
                        {"ridge_used", r.diagnostics.ridge_used},
                        {"notes", r.diagnostics.notes}};
    if (r.h) j["h"] = hedge_to_json(*r.h);
    if (r.f) j["f"] = hedge_to_json(*r.f);
    return j.dump(2);
}

}  // namespace mrh
