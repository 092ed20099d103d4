#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"

namespace mrh::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
}

std::size_t as_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a non-negative integer");
    return static_cast<std::size_t>(j.get<long long>());
}

std::uint64_t as_seed(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        fail(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

ModelConfig parse_model(const json& j) {
    if (!j.is_object()) fail("model", "expected an object");
    check_keys(j, "model", {"kind", "sigma", "spot", "trunc", "grid", "points_csv", "bandwidth"});
    ModelConfig m;
    const json* kind = find(j, "kind");
    if (!kind) fail("model.kind", "required field");
    m.kind = as_string(*kind, "model.kind");
    if (m.kind != "bachelier" && m.kind != "black_scholes" && m.kind != "empirical")
        fail("model.kind", "expected one of bachelier, black_scholes, empirical");

    if (m.kind == "empirical") {
        for (const char* k : {"sigma", "spot"})
            if (find(j, k)) fail(std::string("model.") + k, "not valid for empirical models");
        const json* pts = find(j, "points_csv");
        if (!pts) fail("model.points_csv", "required for empirical models");
        m.points_csv = as_string(*pts, "model.points_csv");
        const json* bw = find(j, "bandwidth");
        if (!bw) fail("model.bandwidth", "required for empirical models");
        m.bandwidth = as_number(*bw, "model.bandwidth");
        if (!(*m.bandwidth > 0.0)) fail("model.bandwidth", "must be > 0");
    } else {
        if (find(j, "points_csv")) fail("model.points_csv", "only valid for empirical models");
        if (find(j, "bandwidth")) fail("model.bandwidth", "only valid for empirical models");
        const json* sig = find(j, "sigma");
        if (!sig) fail("model.sigma", "required field");
        m.sigma = as_number(*sig, "model.sigma");
        if (!(m.sigma > 0.0)) fail("model.sigma", "must be > 0");
        if (const json* spot = find(j, "spot")) {
            m.spot = as_number(*spot, "model.spot");
            if (!(m.spot > 0.0)) fail("model.spot", "must be > 0");
        }
    }
    if (const json* tr = find(j, "trunc")) {
        if (!tr->is_array() || tr->size() != 2) fail("model.trunc", "expected an array of 2 numbers");
        const double lo = as_number((*tr)[0], "model.trunc[0]");
        const double hi = as_number((*tr)[1], "model.trunc[1]");
        if (!(lo > 0.0 && lo < 0.5)) fail("model.trunc[0]", "must be in (0, 0.5)");
        if (!(hi > 0.0 && hi < 0.5)) fail("model.trunc[1]", "must be in (0, 0.5)");
        m.trunc = {lo, hi};
    }
    if (const json* g = find(j, "grid")) {
        m.grid = as_count(*g, "model.grid");
        if (m.grid < 8) fail("model.grid", "must be >= 8");
    }
    return m;
}

CriterionConfig parse_criterion(const json& j) {
    if (!j.is_object()) fail("criterion", "expected an object");
    check_keys(j, "criterion", {"kind", "strike", "rate", "discount_convention", "source"});
    CriterionConfig c;
    const json* kind = find(j, "kind");
    if (!kind) fail("criterion.kind", "required field");
    c.kind = as_string(*kind, "criterion.kind");
    if (c.kind == "forward_start") {
        for (const char* k : {"strike", "rate", "discount_convention", "source"})
            if (find(j, k)) fail(std::string("criterion.") + k, "not valid for forward_start");
    } else if (c.kind == "american_put") {
        if (find(j, "source")) fail("criterion.source", "not valid for american_put");
        const json* strike = find(j, "strike");
        if (!strike) fail("criterion.strike", "required field");
        c.strike = as_number(*strike, "criterion.strike");
        if (!(c.strike > 0.0)) fail("criterion.strike", "must be > 0");
        if (const json* rate = find(j, "rate")) {
            c.rate = as_number(*rate, "criterion.rate");
            if (c.rate < 0.0) fail("criterion.rate", "must be >= 0");
        }
        if (const json* conv = find(j, "discount_convention")) {
            c.discount_convention = as_string(*conv, "criterion.discount_convention");
            if (c.discount_convention != "t12" && c.discount_convention != "t01")
                fail("criterion.discount_convention", "expected t12 or t01");
        }
    } else if (c.kind == "expression") {
        for (const char* k : {"strike", "rate", "discount_convention"})
            if (find(j, k)) fail(std::string("criterion.") + k, "not valid for expression");
        const json* src = find(j, "source");
        if (!src) fail("criterion.source", "required field");
        c.source = as_string(*src, "criterion.source");
        if (c.source.empty()) fail("criterion.source", "must be non-empty");
    } else {
        fail("criterion.kind", "expected one of forward_start, american_put, expression");
    }
    return c;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    check_keys(j, "", {"model", "criterion", "p", "constraints", "metrics", "samples",
                       "quad_order", "seed", "sweep", "r", "radii", "scenario_samples",
                       "recentre"});

    RunConfig cfg;
    const json* model = find(j, "model");
    if (!model) fail("model", "required field");
    cfg.model = parse_model(*model);
    const json* criterion = find(j, "criterion");
    if (!criterion) fail("criterion", "required field");
    cfg.criterion = parse_criterion(*criterion);

    if (const json* p = find(j, "p")) {
        cfg.p = as_number(*p, "p");
        if (!(cfg.p > 1.0)) fail("p", "must be > 1");
    }
    if (const json* cs = find(j, "constraints")) {
        if (!cs->is_array() || cs->empty()) fail("constraints", "expected a non-empty array");
        cfg.constraints.clear();
        for (std::size_t i = 0; i < cs->size(); ++i) {
            const std::string path = "constraints[" + std::to_string(i) + "]";
            const std::string name = as_string((*cs)[i], path);
            auto c = constraint_from_string(name);
            if (!c) fail(path, "expected one of none, M, m1, M_m1");
            if (std::find(cfg.constraints.begin(), cfg.constraints.end(), *c) !=
                cfg.constraints.end())
                fail(path, "duplicate constraint " + name);
            cfg.constraints.push_back(*c);
        }
    }
    if (const json* ms = find(j, "metrics")) {
        if (!ms->is_array() || ms->empty()) fail("metrics", "expected a non-empty array");
        cfg.metrics.clear();
        for (std::size_t i = 0; i < ms->size(); ++i) {
            const std::string path = "metrics[" + std::to_string(i) + "]";
            const std::string name = as_string((*ms)[i], path);
            auto m = metric_from_string(name);
            if (!m) fail(path, "expected adapted or standard");
            if (std::find(cfg.metrics.begin(), cfg.metrics.end(), *m) != cfg.metrics.end())
                fail(path, "duplicate metric " + name);
            cfg.metrics.push_back(*m);
        }
    }
    if (const json* n = find(j, "samples")) {
        cfg.samples = as_count(*n, "samples");
        if (cfg.samples < 1000) fail("samples", "must be >= 1000");
    }
    if (const json* q = find(j, "quad_order")) {
        const std::size_t v = as_count(*q, "quad_order");
        if (v < 4 || v > 512) fail("quad_order", "must be in [4, 512]");
        cfg.quad_order = static_cast<int>(v);
    }
    if (const json* s = find(j, "seed")) cfg.seed = as_seed(*s, "seed");
    if (const json* sw = find(j, "sweep")) {
        if (!sw->is_array() || sw->empty()) fail("sweep", "expected a non-empty array");
        if (cfg.model.kind == "empirical")
            fail("sweep", "not supported for empirical models (no sigma to vary)");
        for (std::size_t i = 0; i < sw->size(); ++i) {
            const std::string path = "sweep[" + std::to_string(i) + "]";
            const double v = as_number((*sw)[i], path);
            if (!(v > 0.0)) fail(path, "must be > 0");
            cfg.sweep.push_back(v);
        }
    }
    if (const json* r = find(j, "r")) {
        cfg.r = as_number(*r, "r");
        if (!(cfg.r > 0.0)) fail("r", "must be > 0");
    }
    if (const json* rs = find(j, "radii")) {
        if (!rs->is_array() || rs->empty()) fail("radii", "expected a non-empty array");
        cfg.radii.clear();
        for (std::size_t i = 0; i < rs->size(); ++i) {
            const std::string path = "radii[" + std::to_string(i) + "]";
            const double v = as_number((*rs)[i], path);
            if (!(v > 0.0)) fail(path, "must be > 0");
            cfg.radii.push_back(v);
        }
    }
    if (const json* n = find(j, "scenario_samples")) {
        cfg.scenario_samples = as_count(*n, "scenario_samples");
        if (cfg.scenario_samples < 1000) fail("scenario_samples", "must be >= 1000");
    }
    if (const json* rc = find(j, "recentre")) cfg.recentre = as_bool(*rc, "recentre");

    // Cross-field checks that do not need model construction.
    evaluation_pairs(cfg, nullptr);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string manifest_json(const RunConfig& cfg, const std::string& command,
                          const std::string& out_dir, int threads,
                          const std::vector<std::string>& notes) {
    json j;
    j["tool"] = "modelrisk";
    j["version"] = "0.1.0";
    j["command"] = command;
    j["out"] = out_dir;
    j["threads"] = threads;

    json model;
    model["kind"] = cfg.model.kind;
    if (cfg.model.kind == "empirical") {
        model["points_csv"] = cfg.model.points_csv;
        model["bandwidth"] = *cfg.model.bandwidth;
    } else {
        model["sigma"] = cfg.model.sigma;
        model["spot"] = cfg.model.spot;
    }
    model["trunc"] = {cfg.model.trunc.first, cfg.model.trunc.second};
    model["grid"] = cfg.model.grid;
    j["model"] = model;

    json crit;
    crit["kind"] = cfg.criterion.kind;
    if (cfg.criterion.kind == "american_put") {
        crit["strike"] = cfg.criterion.strike;
        crit["rate"] = cfg.criterion.rate;
        crit["discount_convention"] = cfg.criterion.discount_convention;
    } else if (cfg.criterion.kind == "expression") {
        crit["source"] = cfg.criterion.source;
    }
    j["criterion"] = crit;

    j["p"] = cfg.p;
    json cs = json::array();
    for (Constraint c : cfg.constraints) cs.push_back(to_string(c));
    j["constraints"] = cs;
    json ms = json::array();
    for (Metric m : cfg.metrics) ms.push_back(to_string(m));
    j["metrics"] = ms;
    j["samples"] = cfg.samples;
    j["quad_order"] = cfg.quad_order;
    j["seed"] = cfg.seed;
    if (!cfg.sweep.empty()) j["sweep"] = cfg.sweep;
    j["r"] = cfg.r;
    j["radii"] = cfg.radii;
    j["scenario_samples"] = cfg.scenario_samples;
    j["recentre"] = cfg.recentre;
    if (!notes.empty()) j["notes"] = notes;
    return j.dump(2) + "\n";
}

TwoPeriodModel build_model(const ModelConfig& cfg, double sigma_override, int quad_order) {
    const double sigma = sigma_override > 0.0 ? sigma_override : cfg.sigma;
    if (cfg.kind == "bachelier")
        return TwoPeriodModel::bachelier(sigma, cfg.spot, cfg.trunc, cfg.grid, quad_order);
    if (cfg.kind == "black_scholes")
        return TwoPeriodModel::black_scholes(sigma, cfg.spot, cfg.trunc, cfg.grid, quad_order);
    // empirical
    NumericTable table;
    try {
        table = read_numeric_csv(cfg.points_csv);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model.points_csv: ") + e.what());
    }
    if (table.columns != 2)
        throw ConfigError("model.points_csv: expected 2 columns (x1, x2), found " +
                          std::to_string(table.columns));
    std::vector<SamplePoint> points;
    points.reserve(table.rows.size());
    for (const auto& row : table.rows) points.push_back({row[0], row[1]});
    try {
        return TwoPeriodModel::empirical(std::move(points), {}, cfg.bandwidth, cfg.trunc,
                                         cfg.grid);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model.points_csv: ") + e.what());
    }
}

Criterion build_criterion(const CriterionConfig& cfg) {
    if (cfg.kind == "forward_start") return Criterion::forward_start();
    if (cfg.kind == "american_put")
        return Criterion::american_put(cfg.strike, cfg.rate, cfg.discount_convention);
    try {
        return Criterion::from_expression(cfg.source);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("criterion.source: ") + e.what());
    }
}

std::vector<std::pair<Metric, Constraint>> evaluation_pairs(const RunConfig& cfg,
                                                            std::vector<std::string>* notes) {
    static const Constraint order[] = {Constraint::None, Constraint::M, Constraint::M1,
                                       Constraint::M_M1};
    std::vector<std::pair<Metric, Constraint>> pairs;
    bool any_requested_standard_row = false;
    for (Metric m : cfg.metrics) {
        for (Constraint c : order) {
            const bool requested = c == Constraint::None ||
                                   std::find(cfg.constraints.begin(), cfg.constraints.end(), c) !=
                                       cfg.constraints.end();
            if (!requested) continue;
            if (m == Metric::Standard) {
                if (c == Constraint::M1 || c == Constraint::M_M1) {
                    if (notes)
                        notes->push_back(std::string("skipped standard/") + to_string(c) +
                                         ": marginal constraints are adapted-metric only");
                    continue;
                }
                if (c == Constraint::M && cfg.p != 2.0) {
                    if (notes)
                        notes->push_back("skipped standard/M: requires p = 2");
                    continue;
                }
            }
            if (m == Metric::Standard && c != Constraint::None) any_requested_standard_row = true;
            pairs.emplace_back(m, c);
        }
    }
    // A standard-only request whose every explicit constraint was dropped is a
    // configuration error, not a silent downgrade to the unconstrained row.
    const bool requested_nontrivial =
        std::any_of(cfg.constraints.begin(), cfg.constraints.end(),
                    [](Constraint c) { return c != Constraint::None; });
    if (cfg.metrics.size() == 1 && cfg.metrics[0] == Metric::Standard && requested_nontrivial &&
        !any_requested_standard_row)
        throw ConfigError(
            "constraints: none of the requested constraints are available under the standard "
            "metric (m1 combinations are adapted-only; M requires p = 2)");
    return pairs;
}

}  // namespace mrh::cli
