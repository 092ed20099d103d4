#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mrh/criterion.hpp"
#include "mrh/model.hpp"
#include "mrh/report.hpp"

namespace mrh::cli {

// Invalid or inconsistent run configuration; messages name the offending
// field path (e.g. "model.sigma: must be > 0").  Mapped to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::string kind;  // bachelier | black_scholes | empirical
    double sigma = 1.0;
    double spot = 1.0;
    std::pair<double, double> trunc{1e-3, 1e-3};
    std::size_t grid = 512;
    std::string points_csv;                 // empirical only
    std::optional<double> bandwidth;        // empirical only
};

struct CriterionConfig {
    std::string kind;  // forward_start | american_put | expression
    double strike = 1.0;
    double rate = 0.0;
    std::string discount_convention = "t12";
    std::string source;  // expression only
};

struct RunConfig {
    ModelConfig model;
    CriterionConfig criterion;
    double p = 2.0;
    std::vector<Constraint> constraints{Constraint::None, Constraint::M, Constraint::M1,
                                        Constraint::M_M1};
    std::vector<Metric> metrics{Metric::Adapted, Metric::Standard};
    std::size_t samples = 1'000'000;
    int quad_order = 64;
    std::uint64_t seed = 42;
    std::vector<double> sweep;  // sigma values; empty = single run at model.sigma
    double r = 0.5;             // worst-case displacement radius
    std::vector<double> radii{0.1, 0.05, 0.025};  // gain-table radii
    std::size_t scenario_samples = 100'000;
    bool recentre = true;  // re-martingalize standard/M scenarios
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

// Resolved-config echo written next to every command's outputs.
std::string manifest_json(const RunConfig& cfg, const std::string& command,
                          const std::string& out_dir, int threads,
                          const std::vector<std::string>& notes);

// sigma_override <= 0 means "use cfg.sigma".
TwoPeriodModel build_model(const ModelConfig& cfg, double sigma_override = 0.0,
                           int quad_order = 64);
Criterion build_criterion(const CriterionConfig& cfg);

// Cross product of requested metrics and constraints in canonical order, the
// unconstrained pair always included per metric.  Standard-metric pairs that
// the theory does not cover (m1 under standard, M under standard with p != 2)
// are dropped with a note; if nothing but notes would remain for the request,
// a ConfigError is raised instead.
std::vector<std::pair<Metric, Constraint>> evaluation_pairs(const RunConfig& cfg,
                                                            std::vector<std::string>* notes);

}  // namespace mrh::cli
