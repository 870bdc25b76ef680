#include "nelastic/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "nelastic/limitproc.hpp"
#include "nelastic/parallel.hpp"

namespace nelastic {

namespace fs = std::filesystem;

namespace {

std::string tag(double v)
{
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::ofstream open_csv(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << std::setprecision(17);
    return out;
}

PhasePoint phase_point(const Json& params, const std::string& qkey, const std::string& pkey, PhasePoint fallback)
{
    return {get_number(params, qkey, "params", fallback.q), get_number(params, pkey, "params", fallback.p)};
}

SectionPoint section_point(const Json& params, SectionPoint fallback)
{
    return {get_number(params, "s0", "params", fallback.s), get_number(params, "theta0", "params", fallback.theta)};
}

ResultRecord make_record(const ExperimentConfig& cfg, std::string quantity, Json parameters)
{
    ResultRecord r;
    r.experiment = cfg.id;
    r.quantity = std::move(quantity);
    r.parameters = std::move(parameters);
    r.asserted = cfg.assert_results;
    return r;
}

// Runs the sink over every (eps, delta) pair; an empty delta list yields one
// pass with delta = 0.
template <class Fn>
void for_each_eps_delta(const ExperimentConfig& cfg, Fn&& fn)
{
    const std::vector<double> deltas = cfg.delta.empty() ? std::vector<double>{0.0} : cfg.delta;
    for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
        for (std::size_t k = 0; k < deltas.size(); ++k) {
            fn(i, cfg.eps[i], k, deltas[k]);
        }
    }
}

std::string model_type(const ExperimentConfig& cfg)
{
    return get_string(cfg.model, "type", "model", "flat");
}

// ------------------------------------------------------------ averaging-1d

void run_averaging(const ExperimentConfig& cfg, RunResult& res, const fs::path* out)
{
    const std::string type = model_type(cfg);
    const double fraction = get_number(cfg.params, "fraction", "params", 0.9);
    const double tol = get_number(cfg.params, "tolerance", "params", 0.02);
    const double hit_tol = get_number(cfg.params, "hit_tolerance", "params", 0.02);
    const double horizon = get_number(cfg.params, "horizon", "params", kInf);

    std::optional<FlatModelSpec> flat;
    std::optional<PotentialSpec> pot;
    LimitModel model;
    GraphPoint y0;
    PhasePoint x0;
    if (type == "flat") {
        flat = parse_flat_model(cfg.model);
        model = flat_limit(*flat);
        x0 = phase_point(cfg.params, "q0", "p0", {0.5 * (flat->walls[0] + flat->walls[1]), 2.0});
        y0 = project(*flat, model.graph, x0);
    } else if (type == "potential") {
        pot = parse_potential_model(cfg.model);
        model = potential_limit(*pot);
        x0 = phase_point(cfg.params, "q0", "p0", {pot->a0, 2.0});
        y0 = project(*pot, model.graph, x0);
    } else {
        throw ConfigError("model.type", "averaging-1d needs a flat or potential model");
    }
    const EdgeFlow& flow = model.flows.at(y0.K);
    const bool leaf = model.graph.edges.at(y0.K).is_leaf();
    double t0 = horizon;
    if (!leaf) {
        t0 = hitting_time(flow, y0.H, flow.h_lo);
    } else if (!std::isfinite(horizon)) {
        throw ConfigError("params.horizon", "a start inside a well needs a finite horizon");
    }
    const double t_max = fraction * t0;

    for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
        const double eps = cfg.eps[i];
        SimOptions opt;
        opt.stop_at_well = !leaf;
        opt.horizon = leaf ? horizon : kInf;
        opt.record_log = cfg.verbose;
        opt.step = get_number(cfg.params, "step", "params", 1e-3);
        const SimResult sim = flat ? simulate_flat(*flat, model.graph, x0, eps, opt)
                                   : simulate_potential(*pot, x0, eps, opt);
        // sup over the breakpoints and a uniform grid on [0, t_max].
        std::vector<double> times;
        for (const auto& pt : sim.path.points) {
            if (pt.t <= t_max) {
                times.push_back(pt.t);
            }
        }
        constexpr int kGrid = 2000;
        for (int k = 0; k <= kGrid; ++k) {
            times.push_back(t_max * k / kGrid);
        }
        double err = 0.0;
        for (double t : times) {
            if (t > sim.path.t_end()) {
                continue;
            }
            err = std::max(err, std::abs(sim.path.at(t).H - edge_solution(flow, y0.H, t)));
        }
        ResultRecord r = make_record(cfg, "sup_energy_error", {{"eps", eps}, {"t_max", t_max}});
        r.estimate = err;
        r.ci = {err, err};
        r.target = 0.0;
        r.tolerance = tol;
        r.comparison = Comparison::AtMost;
        r.extra = {{"collisions", sim.collisions}};
        res.records.push_back(r);

        if (!leaf) {
            const double t_hit = sim.well ? sim.t_end : kInf;
            ResultRecord h = make_record(cfg, "vertex_hitting_time", {{"eps", eps}});
            h.estimate = t_hit;
            h.ci = {t_hit, t_hit};
            h.target = t0;
            h.tolerance = hit_tol * t0;
            res.records.push_back(h);
        }
        if (out) {
            const std::string name = "path_eps" + tag(eps) + ".csv";
            write_path_csv(*out / name, sim.path);
            res.files.push_back(name);
            if (cfg.verbose) {
                const std::string log = "collisions_eps" + tag(eps) + ".csv";
                write_collision_csv(*out / log, sim.log);
                res.files.push_back(log);
            }
        }
    }
}

// ------------------------------------------------------------ branching

void run_branching(const ExperimentConfig& cfg, RunResult& res, const fs::path* out, bool dynamic)
{
    const FlatModelSpec spec = parse_flat_model(cfg.model);
    const PhasePoint x0 = phase_point(cfg.params, "q0", "p0", {0.5 * (spec.walls[0] + spec.walls[1]), 2.0});
    const auto well = static_cast<std::size_t>(get_number(cfg.params, "well", "params", 0.0));
    const double tol = get_number(cfg.params, "tolerance", "params", 0.0);
    if (well >= spec.well_count()) {
        throw ConfigError("params.well", "well index out of range");
    }
    std::vector<NoiseLaw> laws;
    InitNoise::Profile profile = InitNoise::Profile::Bump;
    if (dynamic) {
        if (!cfg.params.contains("noise") || !cfg.params.at("noise").is_array() ||
            cfg.params.at("noise").size() != spec.wall_count()) {
            throw ConfigError("params.noise", "expected one noise law per wall");
        }
        for (std::size_t w = 0; w < spec.wall_count(); ++w) {
            laws.push_back(parse_noise_law(cfg.params.at("noise")[w], "params.noise[" + std::to_string(w) + "]"));
        }
    } else {
        profile = parse_init_profile(get_string(cfg.params, "profile", "params", "bump"), "params.profile");
    }

    for_each_eps_delta(cfg, [&](std::size_t i, double eps, std::size_t k, double delta) {
        EnsembleOptions opt;
        opt.replicas = cfg.replicas;
        opt.seed = cfg.seed;
        opt.threads = cfg.threads;
        opt.experiment = cfg.id + "/" + std::to_string(i) + "/" + std::to_string(k);
        opt.keep_paths = false;
        EnsembleResult ens;
        std::vector<double> shift;
        if (dynamic) {
            DynNoise noise{laws, delta};
            ens = simulate_with_dyn_noise(spec, x0, noise, eps, opt);
            for (const auto& law : laws) {
                shift.push_back(delta * law.mean());
            }
        } else {
            InitNoise noise{delta, profile};
            ens = simulate_with_init_noise(spec, x0, noise, eps, opt);
        }
        const std::vector<double> target = leaf_distribution(flat_limit(spec, shift));
        res.replica_failures += ens.failures;
        ResultRecord r = make_record(cfg, "well_frequency", {{"eps", eps}, {"delta", delta}, {"well", well}});
        r.estimate = ens.freq(well);
        r.ci = ens.trapped > 0 ? ens.wilson(well, cfg.z) : Interval{0.0, 1.0};
        r.target = target.at(well);
        r.tolerance = tol;
        r.extra = {{"wells", wells_json(ens, cfg.z)}, {"trapped", ens.trapped}, {"failures", ens.failures}};
        res.records.push_back(r);
        if (out && cfg.verbose) {
            const std::string name = "replicas_eps" + tag(eps) + "_delta" + tag(delta) + ".csv";
            auto f = open_csv(*out / name);
            f << "replica,q0,p0,well,t_end,collisions,error\n";
            for (std::size_t rep = 0; rep < ens.outcomes.size(); ++rep) {
                const auto& o = ens.outcomes[rep];
                f << rep << "," << o.start.q << "," << o.start.p << ","
                  << (o.well ? std::to_string(*o.well) : std::string("")) << "," << o.t_end << "," << o.collisions
                  << "," << o.error << "\n";
            }
            res.files.push_back(name);
        }
    });
}

// ------------------------------------------------------------ fig6

void run_fig6(const ExperimentConfig& cfg, RunResult& res, const fs::path* out)
{
    ThreeWellGeometry geo;
    const Json& p = cfg.params;
    geo.walls = get_numbers(p, "walls", "params", geo.walls);
    geo.high = get_number(p, "high", "params", geo.high);
    geo.low = get_number(p, "low", "params", geo.low);
    geo.c_left = get_number(p, "c_left", "params", geo.c_left);
    geo.c = get_number(p, "c", "params", geo.c);
    std::vector<double> eps = cfg.eps;
    if (p.contains("hit_counts")) {
        eps.clear();
        for (double n : get_numbers(p, "hit_counts", "params")) {
            eps.push_back(geo.admissible_eps(static_cast<long>(n)));
        }
    }
    if (eps.empty()) {
        throw ConfigError("eps", "fig6 needs eps values or params.hit_counts");
    }
    const PhasePoint x0 = phase_point(p, "q0", "p0", {-0.5, 4.0});
    const InitNoise init{get_number(p, "init_delta", "params", 0.05),
                         parse_init_profile(get_string(p, "profile", "params", "bump"), "params.profile")};
    std::optional<DynNoise> dyn;
    if (p.contains("dyn_delta")) {
        DynNoise d;
        d.delta = get_number(p, "dyn_delta", "params");
        const double lo = get_number(p, "noise_lo", "params", 0.05);
        const double hi = get_number(p, "noise_hi", "params", 2.95);
        d.laws.assign(geo.walls.size(), NoiseLaw::uniform(lo, hi));
        dyn = d;
    }
    const double swing = get_number(p, "swing", "params", 0.8);
    EnsembleOptions opt;
    opt.replicas = cfg.replicas;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.experiment = cfg.id;
    const auto rows = fig6_counterexample(geo, eps, x0, init, dyn ? &*dyn : nullptr, opt);

    std::vector<const Fig6Row*> admissible;
    for (const auto& row : rows) {
        if (!row.warning.empty()) {
            res.warnings.push_back(row.warning);
        }
        res.replica_failures += row.init.failures + (row.dyn ? row.dyn->failures : 0);
        ResultRecord r = make_record(cfg, "middle_frequency_init", {{"eps", row.eps}, {"hit_count", row.hit_count}});
        r.estimate = row.middle_freq;
        r.ci = row.init.trapped > 0 ? row.init.wilson(1, cfg.z) : Interval{0.0, 1.0};
        r.target = r.estimate;
        r.asserted = false;
        r.extra = {{"wells", wells_json(row.init, cfg.z)}, {"middle_share", row.middle_share},
                   {"admissible", row.admissible}};
        res.records.push_back(r);
        if (row.admissible) {
            admissible.push_back(&row);
        }
    }
    for (std::size_t i = 0; i + 1 < admissible.size(); ++i) {
        const Fig6Row& a = *admissible[i];
        const Fig6Row& b = *admissible[i + 1];
        ResultRecord r = make_record(cfg, "init_swing", {{"eps_a", a.eps}, {"eps_b", b.eps}});
        r.estimate = std::abs(a.middle_freq - b.middle_freq);
        r.ci = {r.estimate, r.estimate};
        r.target = swing;
        r.comparison = Comparison::AtLeast;
        res.records.push_back(r);
        if (a.dyn && b.dyn) {
            ResultRecord d = make_record(cfg, "dyn_stability_z", {{"eps_a", a.eps}, {"eps_b", b.eps}});
            d.estimate = two_proportion_z(a.dyn->counts[1], a.dyn->trapped, b.dyn->counts[1], b.dyn->trapped);
            d.ci = {d.estimate, d.estimate};
            d.target = cfg.z;
            d.comparison = Comparison::AtMost;
            d.extra = {{"freq_a", a.dyn_middle_freq}, {"freq_b", b.dyn_middle_freq}};
            res.records.push_back(d);
        }
    }
    if (out) {
        auto f = open_csv(*out / "fig6.csv");
        f << "eps,hit_count,admissible,middle_freq,middle_share,dyn_middle_freq\n";
        for (const auto& row : rows) {
            f << row.eps << "," << row.hit_count << "," << (row.admissible ? 1 : 0) << "," << row.middle_freq << ","
              << row.middle_share << "," << (row.dyn ? row.dyn_middle_freq : std::nan("")) << "\n";
        }
        res.files.push_back("fig6.csv");
    }
}

// ------------------------------------------------------------ walk-parity

StepLaw parse_step_law(const Json& p, const std::string& key, StepLaw fallback)
{
    if (!p.contains(key)) {
        return fallback;
    }
    const std::string w = "params." + key;
    const double lo = get_number(p.at(key), "lo", w);
    const double hi = get_number(p.at(key), "hi", w);
    try {
        return StepLaw::uniform(lo, hi);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(w, e.what());
    }
}

void run_walk(const ExperimentConfig& cfg, RunResult& res, const fs::path* out)
{
    const Json& p = cfg.params;
    AlternatingWalk walk;
    walk.odd = parse_step_law(p, "odd", StepLaw::uniform(1.0, 2.0));
    walk.even = parse_step_law(p, "even", StepLaw::uniform(2.0, 4.0));
    walk.scale = get_number(p, "scale", "params", 1e4);
    walk.rate = get_number(p, "rate", "params", 1.0);
    walk.start = get_number(p, "start", "params", 0.0);
    try {
        walk.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("params", e.what());
    }
    WalkRunOptions opt;
    opt.replicas = cfg.replicas;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.experiment = cfg.id;
    opt.z = cfg.z;
    const ParityEstimate est = stopping_parity(walk, opt);
    ResultRecord r = make_record(cfg, "p_even", {{"scale", walk.scale}, {"rate", walk.rate}});
    r.estimate = est.p_even;
    r.ci = est.ci_even;
    r.target = est.limit;
    r.tolerance = get_number(p, "tolerance", "params", 0.0);
    r.extra = {{"even", est.even}, {"odd", est.odd}, {"mean_index", est.mean_index}, {"max_index", est.max_index}};
    res.records.push_back(r);
    if (p.contains("scan")) {
        const auto rows = parity_convergence_scan(walk, get_numbers(p, "scan", "params"), opt);
        if (out) {
            write_walk_csv(*out / "walk_scan.csv", rows);
            res.files.push_back("walk_scan.csv");
        }
    }
}

// ------------------------------------------------------------ strip-ratio

void run_strips(const ExperimentConfig& cfg, RunResult& res, const fs::path* out)
{
    const FlatModelSpec spec = parse_flat_model(cfg.model);
    const PhasePoint x = phase_point(cfg.params, "q0", "p0", {0.5 * (spec.walls[0] + spec.walls[1]), 2.0});
    const double half = get_number(cfg.params, "half_width", "params", 0.05);
    const std::string wname = get_string(cfg.params, "weight", "params", "lebesgue");
    StripWeight weight = StripWeight::Lebesgue;
    if (wname == "disc") {
        weight = StripWeight::Disc;
    } else if (wname != "lebesgue") {
        throw ConfigError("params.weight", "expected lebesgue or disc");
    }
    const std::vector<double> limit = leaf_distribution(flat_limit(spec));
    const double target = limit.at(0) / limit.at(1);
    const double rel = get_number(cfg.params, "tolerance", "params", 0.05);
    std::ofstream csv;
    if (out) {
        csv = open_csv(*out / "strips.csv");
        csv << "eps,strip,lo,hi,well,collisions\n";
        res.files.push_back("strips.csv");
    }
    for (double eps : cfg.eps) {
        const StripRatio sr = strip_ratio(spec, x, eps, half, weight);
        ResultRecord r = make_record(cfg, "strip_ratio", {{"eps", eps}, {"half_width", half}, {"weight", wname}});
        r.estimate = sr.ratio;
        r.ci = {sr.ratio, sr.ratio};
        r.target = target;
        r.tolerance = rel * target;
        r.extra = {{"strips", sr.strips.size()}, {"min_width", sr.min_width}, {"max_width", sr.max_width}};
        res.records.push_back(r);
        if (out) {
            for (std::size_t k = 0; k < sr.strips.size(); ++k) {
                const Strip& s = sr.strips[k];
                csv << eps << "," << k << "," << s.lo << "," << s.hi << "," << s.well << "," << s.collisions << "\n";
            }
        }
    }
}

// ------------------------------------------------------------ billiard

void require_billiard(const ExperimentConfig& cfg)
{
    if (model_type(cfg) != "billiard") {
        throw ConfigError("model.type", "this experiment needs a billiard model");
    }
}

void run_billiard_decay(const ExperimentConfig& cfg, RunResult& res, const fs::path* out)
{
    require_billiard(cfg);
    const BilliardModel m = parse_billiard_model(cfg.model);
    const ConvexDomain& dom = *m.domain;
    const double H0 = get_number(cfg.params, "H0", "params", 1.0);
    const SectionPoint x0 = section_point(cfg.params, {0.0, 1.0});
    const double min_fraction = get_number(cfg.params, "min_fraction", "params", 0.5);
    const double tol = get_number(cfg.params, "tolerance", "params", 0.05);
    const double step = get_number(cfg.params, "diffusion_step", "params", 0.0);
    const double cm = loss_integral(dom, m.loss, 0.0, 0.0);
    // Closed form reaches min_fraction * H0 at this time.
    const double k = std::numbers::sqrt2 * cm / (2.0 * std::numbers::pi * dom.area());
    const double t_cut = 2.0 * (std::sqrt(H0) - std::sqrt(min_fraction * H0)) / k;

    for_each_eps_delta(cfg, [&](std::size_t i, double eps, std::size_t j, double delta) {
        const StreamKey key(cfg.seed, cfg.id + "/" + std::to_string(i) + "/" + std::to_string(j));
        std::vector<double> dev(cfg.replicas, 0.0);
        std::vector<BilliardResult> kept(1);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            RandomStream rng(key, static_cast<std::uint32_t>(r), 0);
            BilliardOptions opt;
            opt.horizon = t_cut * 1.05;
            opt.stop_at_well = false;
            opt.record_log = r == 0;
            opt.diffusion_step = step;
            BilliardResult b = simulate_billiard(dom, m.loss, m.diffusion, nullptr, x0, H0, eps, delta, rng, opt);
            double worst = 0.0;
            for (const auto& pt : b.energy.points) {
                if (pt.t > t_cut) {
                    break;
                }
                const double exact = billiard_energy_closed_form(H0, cm, dom.area(), pt.t);
                worst = std::max(worst, std::abs(pt.H - exact) / exact);
            }
            dev[r] = worst;
            if (r == 0) {
                kept[0] = std::move(b);
            }
        });
        const double worst = *std::max_element(dev.begin(), dev.end());
        ResultRecord rec = make_record(cfg, "sup_relative_energy_deviation",
                                       {{"eps", eps}, {"delta", delta}, {"t_max", t_cut}, {"H0", H0}});
        rec.estimate = worst;
        rec.ci = {worst, worst};
        rec.target = 0.0;
        rec.tolerance = tol;
        rec.comparison = Comparison::AtMost;
        rec.extra = {{"loss_integral", cm}, {"area", dom.area()}};
        res.records.push_back(rec);
        if (out) {
            const std::string name = "billiard_eps" + tag(eps) + "_delta" + tag(delta) + ".csv";
            write_billiard_csv(*out / name, kept[0].log);
            res.files.push_back(name);
        }
    });
}

void run_billiard_branching(const ExperimentConfig& cfg, RunResult& res)
{
    require_billiard(cfg);
    const BilliardModel m = parse_billiard_model(cfg.model);
    if (!m.wall) {
        throw ConfigError("model.wall", "billiard-branching needs a wall");
    }
    const double H0 = get_number(cfg.params, "H0", "params", m.wall->vertex_energy + 0.15);
    const SectionPoint x0 = section_point(cfg.params, {0.0, 1.0});
    const double tol = get_number(cfg.params, "tolerance", "params", 0.0);
    BilliardOptions opt;
    opt.diffusion_step = get_number(cfg.params, "diffusion_step", "params", 0.0);
    for_each_eps_delta(cfg, [&](std::size_t i, double eps, std::size_t j, double delta) {
        BranchingRun run;
        run.replicas = cfg.replicas;
        run.seed = cfg.seed;
        run.threads = cfg.threads;
        run.experiment = cfg.id + "/" + std::to_string(i) + "/" + std::to_string(j);
        const BranchingEstimate est =
            branching_estimate(*m.domain, *m.wall, m.loss, m.diffusion, x0, H0, eps, delta, run, cfg.z, opt);
        res.replica_failures += est.failures;
        ResultRecord r = make_record(cfg, "well_frequency", {{"eps", eps}, {"delta", delta}, {"well", 0}});
        r.estimate = est.freq_first;
        r.ci = est.ci_first;
        r.target = est.prediction.p_first;
        r.tolerance = tol;
        Json wells = Json::object();
        for (int w = 0; w < 2; ++w) {
            const Interval ci = wilson_interval(est.counts[w], std::max<std::uint64_t>(est.trapped, 1), cfg.z);
            wells[std::to_string(w)] = {{"count", est.counts[w]},
                                        {"freq", est.trapped ? double(est.counts[w]) / double(est.trapped) : 0.0},
                                        {"wilson_lo", ci.lo},
                                        {"wilson_hi", ci.hi}};
        }
        r.extra = {{"wells", wells},
                   {"loss_integral", {est.prediction.cm[0], est.prediction.cm[1]}},
                   {"areas", {est.prediction.area[0], est.prediction.area[1]}},
                   {"mean_collisions", est.mean_collisions}};
        res.records.push_back(r);
    });
}

void run_liouville(const ExperimentConfig& cfg, RunResult& res)
{
    require_billiard(cfg);
    const BilliardModel m = parse_billiard_model(cfg.model);
    const ConvexDomain& dom = *m.domain;
    const Json& p = cfg.params;
    const auto points = static_cast<std::size_t>(get_number(p, "points", "params", 1000));
    const double h = get_number(p, "fd_step", "params", 1e-6);
    const double jac_tol = get_number(p, "jacobian_tolerance", "params", 1e-6);
    const auto steps = static_cast<std::size_t>(get_number(p, "chain_steps", "params", 1e6));
    const double ks_tol = get_number(p, "ks_tolerance", "params", 0.01);
    const double delta = cfg.delta.empty() ? 0.1 : cfg.delta.front();
    const double step = get_number(p, "diffusion_step", "params", 0.0);
    const double margin = get_number(p, "angle_margin", "params", 0.05);

    const StreamKey key(cfg.seed, cfg.id);
    std::vector<double> defect(points, 0.0);
    parallel_for(points, cfg.threads, [&](std::size_t i) {
        const double u1 = key.uniform_at(static_cast<std::uint32_t>(i), 0, 0);
        const double u2 = key.uniform_at(static_cast<std::uint32_t>(i), 0, 1);
        const SectionPoint x{u1 * dom.length(), margin + (std::numbers::pi - 2.0 * margin) * u2};
        defect[i] = liouville_defect(dom, x, h);
    });
    const double worst = points ? *std::max_element(defect.begin(), defect.end()) : 0.0;
    ResultRecord j = make_record(cfg, "liouville_jacobian_defect", {{"points", points}, {"fd_step", h}});
    j.estimate = worst;
    j.ci = {worst, worst};
    j.target = 0.0;
    j.tolerance = jac_tol;
    j.comparison = Comparison::AtMost;
    res.records.push_back(j);

    if (steps > 0) {
        RandomStream rng(key, 0, 1);
        const auto chain = run_section_chain(dom, m.diffusion, {0.0, 1.0}, delta, steps, rng, step);
        std::vector<double> th;
        std::vector<double> ss;
        th.reserve(chain.size());
        ss.reserve(chain.size());
        for (const auto& x : chain) {
            th.push_back(x.theta);
            ss.push_back(x.s);
        }
        const double L = dom.length();
        const double ks_theta = ks_distance(th, [](double t) { return 0.5 * (1.0 - std::cos(t)); });
        const double ks_s = ks_distance(ss, [L](double s) { return s / L; });
        for (auto [name, v] : {std::pair{"ks_angle", ks_theta}, std::pair{"ks_arclength", ks_s}}) {
            ResultRecord r = make_record(cfg, name, {{"steps", steps}, {"delta", delta}});
            r.estimate = v;
            r.ci = {v, v};
            r.target = 0.0;
            r.tolerance = ks_tol;
            r.comparison = Comparison::AtMost;
            res.records.push_back(r);
        }
    }
}

void run_integral_geometry(const ExperimentConfig& cfg, RunResult& res)
{
    require_billiard(cfg);
    const BilliardModel m = parse_billiard_model(cfg.model);
    GeometryQuadrature q;
    q.s_nodes = static_cast<std::size_t>(get_number(cfg.params, "s_nodes", "params", 256));
    const IntegralGeometry ig = check_integral_geometry(*m.domain, q);
    ResultRecord r = make_record(cfg, "chord_integral_relative_error", {{"s_nodes", q.s_nodes}});
    r.estimate = ig.rel_error;
    r.ci = {ig.rel_error, ig.rel_error};
    r.target = 0.0;
    r.tolerance = get_number(cfg.params, "tolerance", "params", 1e-6);
    r.comparison = Comparison::AtMost;
    r.extra = {{"integral", ig.lhs}, {"two_pi_area", ig.rhs}};
    res.records.push_back(r);
}

}  // namespace

std::string to_string(Comparison c)
{
    switch (c) {
    case Comparison::Within:
        return "within";
    case Comparison::AtLeast:
        return "at_least";
    case Comparison::AtMost:
        return "at_most";
    }
    return "within";
}

bool ResultRecord::evaluate()
{
    switch (comparison) {
    case Comparison::Within:
        pass = target >= ci.lo - tolerance && target <= ci.hi + tolerance;
        break;
    case Comparison::AtLeast:
        pass = estimate >= target - tolerance;
        break;
    case Comparison::AtMost:
        pass = estimate <= target + tolerance;
        break;
    }
    return pass;
}

bool RunResult::all_pass() const
{
    return std::all_of(records.begin(), records.end(), [](const ResultRecord& r) { return !r.asserted || r.pass; });
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& o)
{
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.replicas) {
        if (*o.replicas == 0) {
            throw ConfigError("--replicas", "must be at least 1");
        }
        cfg.replicas = *o.replicas;
    }
    if (o.threads) {
        cfg.threads = *o.threads;
    }
    if (o.out_dir) {
        cfg.out_dir = *o.out_dir;
    }
    if (o.assert_results) {
        cfg.assert_results = true;
    }
    return cfg;
}

Json wells_json(const EnsembleResult& ens, double z)
{
    Json out = Json::object();
    for (const WellStat& s : ens.summary(z)) {
        out[std::to_string(s.well)] = {{"count", s.count}, {"freq", s.freq}, {"wilson_lo", s.ci.lo}, {"wilson_hi", s.ci.hi}};
    }
    return out;
}

RunResult run(const ExperimentConfig& cfg, bool write)
{
    RunResult res;
    fs::path dir = cfg.out_dir;
    const fs::path* out = nullptr;
    if (write) {
        fs::create_directories(dir);
        out = &dir;
    }
    switch (cfg.kind) {
    case ExperimentKind::Averaging1d:
        run_averaging(cfg, res, out);
        break;
    case ExperimentKind::BranchingInit:
        run_branching(cfg, res, out, false);
        break;
    case ExperimentKind::BranchingDyn:
        run_branching(cfg, res, out, true);
        break;
    case ExperimentKind::Fig6:
        run_fig6(cfg, res, out);
        break;
    case ExperimentKind::WalkParity:
        run_walk(cfg, res, out);
        break;
    case ExperimentKind::StripRatio:
        run_strips(cfg, res, out);
        break;
    case ExperimentKind::BilliardDecay:
        run_billiard_decay(cfg, res, out);
        break;
    case ExperimentKind::BilliardBranching:
        run_billiard_branching(cfg, res);
        break;
    case ExperimentKind::LiouvilleCheck:
        run_liouville(cfg, res);
        break;
    case ExperimentKind::IntegralGeometry:
        run_integral_geometry(cfg, res);
        break;
    }
    for (auto& r : res.records) {
        r.evaluate();
    }
    if (res.replica_failures > 0) {
        res.warnings.push_back(std::to_string(res.replica_failures) + " replica(s) failed and were excluded");
    }
    if (write) {
        res.files.push_back("results.json");
        std::ofstream f(dir / "results.json");
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / "results.json").string());
        }
        f << results_json(cfg, res).dump(2) << "\n";
    }
    return res;
}

Json results_json(const ExperimentConfig& cfg, const RunResult& res)
{
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["experiment"] = cfg.id;
    doc["name"] = cfg.name;
    doc["seed"] = cfg.seed;
    doc["replicas"] = cfg.replicas;
    doc["eps"] = cfg.eps;
    doc["delta"] = cfg.delta;
    doc["z"] = cfg.z;
    doc["model"] = cfg.model;
    doc["params"] = cfg.params;
    Json records = Json::array();
    for (const auto& r : res.records) {
        Json j;
        j["experiment"] = r.experiment;
        j["quantity"] = r.quantity;
        j["parameters"] = r.parameters;
        j["estimate"] = r.estimate;
        j["ci"] = {r.ci.lo, r.ci.hi};
        j["target"] = r.target;
        j["tolerance"] = r.tolerance;
        j["comparison"] = to_string(r.comparison);
        j["asserted"] = r.asserted;
        j["pass"] = r.pass;
        for (auto it = r.extra.begin(); it != r.extra.end(); ++it) {
            j[it.key()] = it.value();
        }
        records.push_back(j);
    }
    doc["records"] = records;
    doc["replica_failures"] = res.replica_failures;
    doc["warnings"] = res.warnings;
    doc["all_pass"] = res.all_pass();
    return doc;
}

void write_collision_csv(const fs::path& path, const std::vector<CollisionRecord>& log)
{
    auto f = open_csv(path);
    f << "t,wall,pre_speed,post_speed,energy_after\n";
    for (const auto& r : log) {
        f << r.t << "," << r.wall << "," << r.pre_speed << "," << r.post_speed << "," << r.energy_after << "\n";
    }
}

void write_path_csv(const fs::path& path, const GraphPath& path_data)
{
    auto f = open_csv(path);
    f << "t,H,K\n";
    for (const auto& p : path_data.points) {
        f << p.t << "," << p.H << "," << p.K << "\n";
    }
}

void write_walk_csv(const fs::path& path, const std::vector<ScanRow>& rows)
{
    auto f = open_csv(path);
    f << "n,p_even,ci_lo,ci_hi,analytic_limit\n";
    for (const auto& r : rows) {
        f << r.scale << "," << r.estimate.p_even << "," << r.estimate.ci_even.lo << "," << r.estimate.ci_even.hi << ","
          << r.estimate.limit << "\n";
    }
}

void write_billiard_csv(const fs::path& path, const std::vector<BilliardRecord>& log)
{
    auto f = open_csv(path);
    f << "n,s,theta,H,t\n";
    for (const auto& r : log) {
        f << r.n << "," << r.s << "," << r.theta << "," << r.H << "," << r.t << "\n";
    }
}

double billiard_energy_closed_form(double H0, double cm_total, double area, double t)
{
    const double k = std::numbers::sqrt2 * cm_total / (2.0 * std::numbers::pi * area);
    const double root = std::max(std::sqrt(H0) - 0.5 * k * t, 0.0);
    return root * root;
}

}  // namespace nelastic
