#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nelastic/billiard2d.hpp"
#include "nelastic/config.hpp"
#include "nelastic/regularize.hpp"
#include "nelastic/sim1d.hpp"
#include "nelastic/walk.hpp"

namespace nelastic {

inline constexpr int kSchemaVersion = 1;

/// How a record is judged: the target must lie in the CI widened by the
/// tolerance, or the estimate must clear a one-sided bound.
enum class Comparison { Within, AtLeast, AtMost };

std::string to_string(Comparison c);

struct ResultRecord {
    std::string experiment;
    std::string quantity;
    Json parameters = Json::object();
    double estimate = 0.0;
    Interval ci;
    double target = 0.0;
    double tolerance = 0.0;
    Comparison comparison = Comparison::Within;
    bool asserted = true;
    bool pass = false;
    Json extra = Json::object();  // e.g. per-well counts

    /// Sets and returns `pass`.
    bool evaluate();
};

struct RunResult {
    std::vector<ResultRecord> records;
    std::uint64_t replica_failures = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> files;  // relative to the output directory

    /// False iff an asserted record failed.
    bool all_pass() const;
};

/// Command-line overrides applied on top of the config file.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
    bool assert_results = false;
};

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& o);

/// Runs the experiment. If `write` is set, results.json and the CSV files are
/// written under cfg.out_dir.
RunResult run(const ExperimentConfig& cfg, bool write = true);

/// Result document; contains nothing that depends on scheduling or wall time.
Json results_json(const ExperimentConfig& cfg, const RunResult& res);

/// Wells section {well_id: {count, freq, wilson_lo, wilson_hi}}.
Json wells_json(const EnsembleResult& ens, double z);

// CSV writers with fixed headers.
void write_collision_csv(const std::filesystem::path& path, const std::vector<CollisionRecord>& log);
void write_path_csv(const std::filesystem::path& path, const GraphPath& path_data);
void write_walk_csv(const std::filesystem::path& path, const std::vector<ScanRow>& rows);
void write_billiard_csv(const std::filesystem::path& path, const std::vector<BilliardRecord>& log);

/// Closed-form decay of the billiard energy for a total loss integral cm over
/// a domain of area A: sqrt(H) falls linearly at rate sqrt(2) cm / (4 pi A).
double billiard_energy_closed_form(double H0, double cm_total, double area, double t);

}  // namespace nelastic
