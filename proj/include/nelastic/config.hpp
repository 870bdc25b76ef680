#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelastic/billiard2d.hpp"
#include "nelastic/model1d.hpp"
#include "nelastic/regularize.hpp"

namespace nelastic {

using Json = nlohmann::json;

/// Configuration problem, with the offending location (line/column for syntax
/// errors, a dotted field path otherwise).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where))
    {
    }
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

enum class ExperimentKind {
    Averaging1d,
    BranchingInit,
    BranchingDyn,
    Fig6,
    WalkParity,
    StripRatio,
    BilliardDecay,
    BilliardBranching,
    LiouvilleCheck,
    IntegralGeometry,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& id);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::WalkParity;
    std::string id;           // experiment id as written
    std::string name;         // free label, defaults to id
    Json model;               // model spec (flat, potential, billiard)
    std::vector<double> eps;
    std::vector<double> delta;
    std::size_t replicas = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    Json params = Json::object();
    double z = 3.0;
    bool assert_results = false;
    std::string out_dir = "results";
    bool verbose = false;
};

/// Parses and validates a config document. `source` names the document in
/// diagnostics.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Model sections. `where` is the field path used in diagnostics.
FlatModelSpec parse_flat_model(const Json& j, const std::string& where = "model");
PotentialSpec parse_potential_model(const Json& j, const std::string& where = "model");
Coefficient parse_coefficient(const Json& j, const std::string& where);
NoiseLaw parse_noise_law(const Json& j, const std::string& where);
InitNoise::Profile parse_init_profile(const std::string& name, const std::string& where);

struct BilliardModel {
    std::shared_ptr<const ConvexDomain> domain;
    LossField loss;
    AngularDiffusion diffusion;
    std::optional<ChordWall> wall;
};

BilliardModel parse_billiard_model(const Json& j, const std::string& where = "model");

/// Typed accessors on a JSON object with field-path diagnostics.
double get_number(const Json& obj, const std::string& key, const std::string& where,
                  std::optional<double> fallback = std::nullopt);
std::vector<double> get_numbers(const Json& obj, const std::string& key, const std::string& where,
                                std::optional<std::vector<double>> fallback = std::nullopt);
std::string get_string(const Json& obj, const std::string& key, const std::string& where,
                       std::optional<std::string> fallback = std::nullopt);

}  // namespace nelastic
