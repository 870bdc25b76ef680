#include "nelastic/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace nelastic {

namespace {

struct KindName {
    ExperimentKind kind;
    const char* id;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Averaging1d, "averaging-1d"},
    {ExperimentKind::BranchingInit, "branching-init"},
    {ExperimentKind::BranchingDyn, "branching-dyn"},
    {ExperimentKind::Fig6, "fig6"},
    {ExperimentKind::WalkParity, "walk-parity"},
    {ExperimentKind::StripRatio, "strip-ratio"},
    {ExperimentKind::BilliardDecay, "billiard-decay"},
    {ExperimentKind::BilliardBranching, "billiard-branching"},
    {ExperimentKind::LiouvilleCheck, "liouville-check"},
    {ExperimentKind::IntegralGeometry, "integral-geometry"},
};

std::string field(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

const Json& require(const Json& obj, const std::string& key, const std::string& where)
{
    if (!obj.is_object()) {
        throw ConfigError(where, "expected an object");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError(field(where, key), "missing required field");
    }
    return *it;
}

// Line and column of a byte offset, both 1-based.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset)
{
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

void check_unit_interval(const std::vector<double>& values, const std::string& where)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0 && values[i] < 1.0)) {
            throw ConfigError(where + "[" + std::to_string(i) + "]", "must lie in (0, 1)");
        }
    }
}

std::optional<double> arc_position(const Json& j, const std::string& key, const std::string& where, double length)
{
    if (j.contains(key)) {
        return get_number(j, key, where);
    }
    const std::string frac = key + "_fraction";
    if (j.contains(frac)) {
        return get_number(j, frac, where) * length;
    }
    return std::nullopt;
}

}  // namespace

std::string to_string(ExperimentKind k)
{
    for (const auto& e : kKinds) {
        if (e.kind == k) {
            return e.id;
        }
    }
    return "unknown";
}

ExperimentKind experiment_from_string(const std::string& id)
{
    for (const auto& e : kKinds) {
        if (id == e.id) {
            return e.kind;
        }
    }
    std::string known;
    for (const auto& e : kKinds) {
        known += known.empty() ? "" : ", ";
        known += e.id;
    }
    throw ConfigError("experiment", "unknown experiment id '" + id + "' (known: " + known + ")");
}

double get_number(const Json& obj, const std::string& key, const std::string& where, std::optional<double> fallback)
{
    if (!obj.is_object() || !obj.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError(field(where, key), "missing required number");
    }
    const Json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(field(where, key), std::string("expected a number, got ") + v.type_name());
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ConfigError(field(where, key), "must be finite");
    }
    return d;
}

std::vector<double> get_numbers(const Json& obj, const std::string& key, const std::string& where,
                                std::optional<std::vector<double>> fallback)
{
    if (!obj.is_object() || !obj.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError(field(where, key), "missing required list");
    }
    const Json& v = obj.at(key);
    if (v.is_number()) {
        return {v.get<double>()};
    }
    if (!v.is_array()) {
        throw ConfigError(field(where, key), std::string("expected a list of numbers, got ") + v.type_name());
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw ConfigError(field(where, key) + "[" + std::to_string(i) + "]", "expected a number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::string get_string(const Json& obj, const std::string& key, const std::string& where,
                       std::optional<std::string> fallback)
{
    if (!obj.is_object() || !obj.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError(field(where, key), "missing required string");
    }
    const Json& v = obj.at(key);
    if (!v.is_string()) {
        throw ConfigError(field(where, key), std::string("expected a string, got ") + v.type_name());
    }
    return v.get<std::string>();
}

Coefficient parse_coefficient(const Json& j, const std::string& where)
{
    if (j.is_number()) {
        const double c = j.get<double>();
        if (!(c > 0.0)) {
            throw ConfigError(where, "restitution coefficient must be positive");
        }
        return Coefficient::constant(c);
    }
    if (j.is_object()) {
        if (j.contains("constant")) {
            return parse_coefficient(j.at("constant"), field(where, "constant"));
        }
        if (j.contains("affine")) {
            const auto ab = get_numbers(j, "affine", where);
            if (ab.size() != 2) {
                throw ConfigError(field(where, "affine"), "expected [value_at_zero, slope]");
            }
            if (!(ab[0] > 0.0) || ab[1] < 0.0) {
                throw ConfigError(field(where, "affine"), "need value_at_zero > 0 and slope >= 0");
            }
            return Coefficient::affine(ab[0], ab[1]);
        }
    }
    throw ConfigError(where, "expected a number, {\"constant\": c} or {\"affine\": [c0, slope]}");
}

NoiseLaw parse_noise_law(const Json& j, const std::string& where)
{
    const std::string law = get_string(j, "law", where, "uniform");
    const double lo = get_number(j, "lo", where);
    const double hi = get_number(j, "hi", where);
    if (!(lo >= 0.0 && hi > lo)) {
        throw ConfigError(where, "noise support must satisfy 0 <= lo < hi");
    }
    if (law == "uniform") {
        return NoiseLaw::uniform(lo, hi);
    }
    if (law == "bump") {
        return NoiseLaw::bump(lo, hi);
    }
    throw ConfigError(field(where, "law"), "unknown noise law '" + law + "' (uniform, bump)");
}

InitNoise::Profile parse_init_profile(const std::string& name, const std::string& where)
{
    if (name == "bump") {
        return InitNoise::Profile::Bump;
    }
    if (name == "cone") {
        return InitNoise::Profile::Cone;
    }
    if (name == "flat") {
        return InitNoise::Profile::Flat;
    }
    throw ConfigError(where, "unknown profile '" + name + "' (bump, cone, flat)");
}

FlatModelSpec parse_flat_model(const Json& j, const std::string& where)
{
    FlatModelSpec spec;
    spec.walls = get_numbers(j, "walls", where);
    spec.heights = get_numbers(j, "heights", where, std::vector<double>{});
    const Json& rest = require(j, "restitution", where);
    if (!rest.is_array()) {
        throw ConfigError(field(where, "restitution"), "expected one entry per wall");
    }
    for (std::size_t i = 0; i < rest.size(); ++i) {
        spec.restitution.push_back(parse_coefficient(rest[i], field(where, "restitution") + "[" + std::to_string(i) + "]"));
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
    }
    return spec;
}

PotentialSpec parse_potential_model(const Json& j, const std::string& where)
{
    const std::string shape = get_string(j, "potential", where);
    const double a1 = get_number(j, "a1", where, -1.0);
    const double a2 = get_number(j, "a2", where, 1.0);
    const double peak = get_number(j, "peak", where, 0.0);
    PotentialSpec spec;
    try {
        if (shape == "quadratic") {
            spec = PotentialSpec::quadratic(get_number(j, "k", where, 1.0), a1, a2, peak, get_number(j, "top", where, 0.0));
        } else if (shape == "quartic") {
            spec = PotentialSpec::quartic(get_number(j, "k2", where, 1.0), get_number(j, "k4", where, 0.0), a1, a2, peak,
                                          get_number(j, "top", where, 0.0));
        } else if (shape == "cosine") {
            spec = PotentialSpec::cosine(get_number(j, "amplitude", where, 1.0), get_number(j, "k", where, 1.0), a1, a2,
                                         peak);
        } else if (shape == "piecewise") {
            const Json& segs = require(j, "segments", where);
            if (!segs.is_array() || segs.empty()) {
                throw ConfigError(field(where, "segments"), "expected a non-empty list");
            }
            std::vector<PotentialSpec::PolySegment> table;
            for (std::size_t i = 0; i < segs.size(); ++i) {
                const std::string w = field(where, "segments") + "[" + std::to_string(i) + "]";
                table.push_back({get_number(segs[i], "lo", w), get_number(segs[i], "hi", w),
                                 get_numbers(segs[i], "coeffs", w)});
            }
            spec = PotentialSpec::piecewise_polynomial(std::move(table));
        } else {
            throw ConfigError(field(where, "potential"),
                              "unknown potential '" + shape + "' (quadratic, quartic, cosine, piecewise)");
        }
        const Json& rest = require(j, "restitution", where);
        if (!rest.is_array() || rest.size() != 2) {
            throw ConfigError(field(where, "restitution"), "expected two entries, for a1 and a2");
        }
        spec.c1 = parse_coefficient(rest[0], field(where, "restitution") + "[0]");
        spec.c2 = parse_coefficient(rest[1], field(where, "restitution") + "[1]");
        spec.validate_and_locate_peak();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
    }
    return spec;
}

BilliardModel parse_billiard_model(const Json& j, const std::string& where)
{
    BilliardModel m;
    const Json& shape = require(j, "shape", where);
    const std::string sw = field(where, "shape");
    const std::string kind = get_string(shape, "kind", sw);
    std::shared_ptr<const Curve> curve;
    try {
        if (kind == "circle") {
            curve = make_circle(get_number(shape, "radius", sw, 1.0));
        } else if (kind == "ellipse") {
            curve = make_ellipse(get_number(shape, "a", sw), get_number(shape, "b", sw));
        } else if (kind == "superellipse") {
            curve = make_superellipse(get_number(shape, "a", sw), get_number(shape, "b", sw), get_number(shape, "n", sw));
        } else {
            throw ConfigError(field(sw, "kind"), "unknown shape '" + kind + "' (circle, ellipse, superellipse)");
        }
        const auto panels = static_cast<std::size_t>(get_number(j, "panels", where, 1024));
        m.domain = std::make_shared<const ConvexDomain>(curve, panels);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(sw, e.what());
    }
    const double L = m.domain->length();

    m.loss = LossField::constant(1.0);
    if (j.contains("loss")) {
        const Json& loss = j.at("loss");
        const std::string lw = field(where, "loss");
        const std::string lk = get_string(loss, "kind", lw);
        try {
            if (lk == "constant") {
                m.loss = LossField::constant(get_number(loss, "c", lw));
            } else if (lk == "sides") {
                const auto a = arc_position(loss, "from", lw, L);
                const auto b = arc_position(loss, "to", lw, L);
                if (!a || !b) {
                    throw ConfigError(lw, "sides needs from/to (arc length) or from_fraction/to_fraction");
                }
                m.loss = LossField::sides(*a, *b, get_number(loss, "inside", lw), get_number(loss, "outside", lw), L);
            } else if (lk == "fourier") {
                m.loss = LossField::fourier(get_number(loss, "c0", lw), get_numbers(loss, "cos", lw, std::vector<double>{}),
                                            get_numbers(loss, "sin", lw, std::vector<double>{}), L);
            } else {
                throw ConfigError(field(lw, "kind"), "unknown loss field '" + lk + "' (constant, sides, fourier)");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(lw, e.what());
        }
    }

    if (j.contains("diffusion")) {
        const std::string dw = field(where, "diffusion");
        m.diffusion.a0 = get_number(j.at("diffusion"), "a0", dw, 1.0);
        m.diffusion.a2 = get_number(j.at("diffusion"), "a2", dw, 0.0);
        try {
            m.diffusion.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(dw, e.what());
        }
    }

    if (j.contains("wall")) {
        const Json& wall = j.at("wall");
        const std::string ww = field(where, "wall");
        const auto a = arc_position(wall, "from", ww, L);
        const auto b = arc_position(wall, "to", ww, L);
        if (!a || !b) {
            throw ConfigError(ww, "wall needs from/to (arc length) or from_fraction/to_fraction");
        }
        try {
            m.wall = ChordWall::make(*m.domain, *a, *b, get_number(wall, "vertex_energy", ww),
                                     get_number(wall, "c", ww, 0.0));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(ww, e.what());
        }
    }
    return m;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source)
{
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream where;
        where << source << ":" << line << ":" << col;
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        throw ConfigError(where.str(), pos == std::string::npos ? msg : msg.substr(pos));
    }
    if (!doc.is_object()) {
        throw ConfigError(source, "top level must be an object");
    }
    ExperimentConfig cfg;
    cfg.id = get_string(doc, "experiment", "");
    cfg.kind = experiment_from_string(cfg.id);
    cfg.name = get_string(doc, "name", "", cfg.id);
    if (doc.contains("model")) {
        cfg.model = doc.at("model");
        if (!cfg.model.is_object()) {
            throw ConfigError("model", "expected an object");
        }
    }
    cfg.eps = get_numbers(doc, "eps", "", std::vector<double>{});
    cfg.delta = get_numbers(doc, "delta", "", std::vector<double>{});
    check_unit_interval(cfg.eps, "eps");
    check_unit_interval(cfg.delta, "delta");
    const double replicas = get_number(doc, "replicas", "", 1000.0);
    if (!(replicas >= 1.0) || replicas != std::floor(replicas)) {
        throw ConfigError("replicas", "must be a positive integer");
    }
    cfg.replicas = static_cast<std::size_t>(replicas);
    const double seed = get_number(doc, "seed", "", 1.0);
    if (seed < 0.0 || seed != std::floor(seed)) {
        throw ConfigError("seed", "must be a non-negative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(seed);
    const double threads = get_number(doc, "threads", "", 0.0);
    if (threads < 0.0 || threads != std::floor(threads)) {
        throw ConfigError("threads", "must be a non-negative integer (0 = all cores)");
    }
    cfg.threads = static_cast<unsigned>(threads);
    if (doc.contains("params")) {
        cfg.params = doc.at("params");
        if (!cfg.params.is_object()) {
            throw ConfigError("params", "expected an object");
        }
    }
    cfg.z = get_number(doc, "z", "", 3.0);
    if (!(cfg.z > 0.0)) {
        throw ConfigError("z", "must be positive");
    }
    if (doc.contains("assert")) {
        if (!doc.at("assert").is_boolean()) {
            throw ConfigError("assert", "expected true or false");
        }
        cfg.assert_results = doc.at("assert").get<bool>();
    }
    if (doc.contains("output")) {
        const Json& out = doc.at("output");
        cfg.out_dir = get_string(out, "dir", "output", cfg.out_dir);
        if (out.contains("verbose")) {
            if (!out.at("verbose").is_boolean()) {
                throw ConfigError("output.verbose", "expected true or false");
            }
            cfg.verbose = out.at("verbose").get<bool>();
        }
    }

    // Experiment-specific requirements that can be checked without running.
    switch (cfg.kind) {
    case ExperimentKind::Averaging1d:
    case ExperimentKind::BranchingInit:
    case ExperimentKind::BranchingDyn:
    case ExperimentKind::StripRatio:
    case ExperimentKind::BilliardDecay:
    case ExperimentKind::BilliardBranching:
        if (cfg.eps.empty()) {
            throw ConfigError("eps", "this experiment needs at least one eps value");
        }
        break;
    default:
        break;
    }
    switch (cfg.kind) {
    case ExperimentKind::BranchingInit:
    case ExperimentKind::BranchingDyn:
        if (cfg.delta.empty()) {
            throw ConfigError("delta", "this experiment needs at least one delta value");
        }
        break;
    default:
        break;
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot open config file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

}  // namespace nelastic
