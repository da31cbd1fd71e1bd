// fopid: command-line front end for reduction, tuning, simulation and analysis.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fopid/reproduce.hpp"

namespace fs = std::filesystem;
using namespace fopid;

namespace {

enum Exit { kOk = 0, kInput = 1, kNoConvergence = 2, kAcceptance = 3 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 1;
    int starts = 0;  // 0: command default
    OustaloupConfig oustaloup;
    SimConfig sim;
};

// Values from --config are applied first; any flag given on the command line
// then overrides them.
void apply_config(Settings& s, const CLI::App& app) {
    if (s.config.empty()) return;
    const Json j = read_json(s.config);
    const auto flag_set = [&](const char* name) { return app.count(name) > 0; };
    if (j.contains("oustaloup")) {
        const Json& o = j.at("oustaloup");
        if (!flag_set("--omega-low")) s.oustaloup.omega_low = o.value("omega_low", s.oustaloup.omega_low);
        if (!flag_set("--omega-high")) s.oustaloup.omega_high = o.value("omega_high", s.oustaloup.omega_high);
        if (!flag_set("--oustaloup-order")) s.oustaloup.order = o.value("order", s.oustaloup.order);
    }
    if (j.contains("sim")) {
        const Json& o = j.at("sim");
        if (!flag_set("--dt")) s.sim.dt = o.value("dt", s.sim.dt);
        if (!flag_set("--t-end")) s.sim.t_end = o.value("t_end", s.sim.t_end);
        if (!flag_set("--pade-order")) s.sim.pade_order = o.value("pade_order", s.sim.pade_order);
    }
    if (!flag_set("--seed")) s.seed = j.value("seed", s.seed);
    if (!flag_set("--starts")) s.starts = j.value("starts", s.starts);
    if (!flag_set("--out")) s.out_dir = j.value("output_dir", s.out_dir);
}

void finalize(Settings& s, const CLI::App& app) {
    apply_config(s, app);
    if (s.out_dir.empty()) {
        const char* env = std::getenv("FOPID_OUTPUT_DIR");
        s.out_dir = env ? env : ".";
    }
    s.sim.oustaloup = s.oustaloup;
    try {
        s.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    if (s.starts < 0) throw InputError("--starts must be >= 1");
    const fs::path out(s.out_dir);
    if (fs::exists(out) && !fs::is_directory(out)) throw InputError("output path is not a directory: " + s.out_dir);
    const fs::path parent = fs::absolute(out).parent_path();
    if (!fs::exists(out) && !fs::exists(parent)) throw InputError("parent of output directory does not exist: " + s.out_dir);
}

std::string out_path(const Settings& s, const std::string& file) {
    fs::create_directories(s.out_dir);
    return (fs::path(s.out_dir) / file).string();
}

template <class F>
auto load(F&& f, const std::string& what) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

void add_common(CLI::App* cmd, Settings& s) {
    cmd->add_option("--config", s.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    cmd->add_option("--out", s.out_dir, "output directory (default $FOPID_OUTPUT_DIR or .)");
    cmd->add_option("--seed", s.seed, "seed for start perturbations");
    cmd->add_option("--omega-low", s.oustaloup.omega_low, "Oustaloup band lower edge (rad/s)");
    cmd->add_option("--omega-high", s.oustaloup.omega_high, "Oustaloup band upper edge (rad/s)");
    cmd->add_option("--oustaloup-order", s.oustaloup.order, "Oustaloup order N (2N+1 zero/pole pairs)");
    cmd->add_option("--pade-order", s.sim.pade_order, "Pade order of delay approximations");
}

void add_sim(CLI::App* cmd, Settings& s) {
    cmd->add_option("--dt", s.sim.dt, "sample time (s)");
    cmd->add_option("--t-end", s.sim.t_end, "simulation horizon (s)");
}

int cmd_reduce(const Settings& s, const std::string& plant_file, const std::string& tmpl) {
    const Fotf plant = load([&] { return load_plant(plant_file); }, "plant file");
    FitOptions opt;
    opt.seed = s.seed;
    opt.h2.omega_low = s.oustaloup.omega_low;
    opt.h2.omega_high = s.oustaloup.omega_high;
    if (s.starts > 0) opt.starts = s.starts;

    std::vector<RankEntry> fits;
    if (tmpl == "rank") {
        fits = rank_templates(plant, opt);
    } else {
        const TemplateKind kind = load([&] { return parse_template_kind(tmpl); }, "--template");
        fits.push_back({kind, fit_template(plant, kind, std::nullopt, opt), {}});
    }
    if (!fits.front().fit) throw std::runtime_error("no template could be fitted: " + fits.front().error);
    const FitResult& best = *fits.front().fit;

    Json report = Json::array();
    for (const auto& e : fits) {
        report.push_back(e.fit ? fit_to_json(*e.fit) : Json{{"template", to_string(e.kind)}, {"error", e.error}});
    }
    write_json(fit_to_json(best), out_path(s, "model.json"));
    write_json(report, out_path(s, "reduce_report.json"));

    const Fotf model = to_fotf(best.model);
    std::ofstream csv(out_path(s, "reduce_magnitude.csv"));
    csv << "omega,plant_mag,model_mag\n";
    for (double w : log_space(opt.h2.omega_low, opt.h2.omega_high, opt.h2.points)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", w, std::abs(freq_response(plant, w)),
                      std::abs(freq_response(model, w)));
        csv << buf;
    }
    for (const auto& e : fits) {
        if (e.fit) std::cout << to_string(e.kind) << "  j_f " << e.fit->j_f << (e.fit->converged ? "" : "  (not converged)") << '\n';
        else std::cout << to_string(e.kind) << "  failed: " << e.error << '\n';
    }
    std::cout << "preferred " << to_string(best.kind) << '\n';
    return best.converged ? kOk : kNoConvergence;
}

int cmd_tune_freq(const Settings& s, const std::string& model_file, const FreqSpec& spec) {
    const ReducedModel m = load([&] { return load_model(model_file); }, "model file");
    load([&] { spec.validate(); return 0; }, "specification");
    FreqTuneOptions opt;
    opt.seed = s.seed;
    if (s.starts > 0) opt.restarts = s.starts;
    const TuningResult t = tune_frequency_domain(to_fotf(m), spec, std::nullopt, opt);
    Json report = {{"controller", controller_to_json(t.params)},
                   {"residuals", {{"r1_phase_rad", t.residuals[0]},
                                  {"r2_gain", t.residuals[1]},
                                  {"r3_phase_slope", t.residuals[2]},
                                  {"r4_T_db", t.residuals[3]},
                                  {"r5_S_db", t.residuals[4]}}},
                   {"converged", t.converged},
                   {"caps_relaxed", t.caps_relaxed},
                   {"advisory", t.advisory}};
    write_json(controller_to_json(t.params), out_path(s, "controller.json"));
    write_json(report, out_path(s, "freq_report.json"));
    std::cout << report.dump(2) << '\n';
    if (!t.converged) std::cerr << "warning: " << t.advisory << '\n';
    return t.converged ? kOk : kNoConvergence;
}

BoxBounds parse_bounds(const std::vector<double>& b) {
    if (b.empty()) return default_time_bounds();
    if (b.size() != 4) throw InputError("--bounds expects gain_lo gain_hi order_lo order_hi");
    RealVector lo(5), hi(5);
    lo << b[0], b[0], b[0], b[2], b[2];
    hi << b[1], b[1], b[1], b[3], b[3];
    if (!(b[0] > 0 && b[2] > 0)) throw InputError("--bounds lower limits must be positive");
    try {
        return {lo, hi};
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("--bounds: ") + e.what());
    }
}

int cmd_tune_time(const Settings& s, const std::string& plant_file, const std::string& index,
                  const std::vector<double>& bounds_flag) {
    const Fotf plant = load([&] { return load_plant(plant_file); }, "plant file");
    const BoxBounds bounds = parse_bounds(bounds_flag);
    std::vector<IndexKind> kinds;
    if (index == "all") {
        kinds.assign(std::begin(kAllIndices), std::end(kAllIndices));
    } else {
        kinds.push_back(load([&] { return parse_index_kind(index); }, "--index"));
    }
    TimeTuneOptions opt;
    opt.seed = s.seed;
    if (s.starts > 0) opt.starts = s.starts;

    std::vector<TimeTuneResult> results;
    for (IndexKind k : kinds) results.push_back(tune_time_domain(plant, k, bounds, s.sim, opt));

    std::ostringstream table;
    table << "index,j_min,Kp,Ki,Kd,lambda,mu,mp_pct,t_r,stable\n";
    bool all_found = true;
    for (const auto& r : results) {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", to_string(r.index).c_str(),
                      r.j_min, r.params.Kp, r.params.Ki, r.params.Kd, r.params.lambda, r.params.mu, r.mp_pct, r.t_r,
                      r.stable ? 1 : 0);
        table << buf;
        all_found = all_found && r.found;
    }
    write_json(controller_to_json(results.front().params), out_path(s, "controller.json"));
    {
        std::ofstream f(out_path(s, "tune_time_table.csv"));
        f << table.str();
    }
    if (results.front().found) {
        export_csv(simulate_step(closed_loop_realize(plant, results.front().params, s.sim), s.sim),
                   out_path(s, "step.csv"));
    }
    std::cout << table.str();
    return all_found ? kOk : kNoConvergence;
}

int cmd_simulate(const Settings& s, const std::string& plant_file, const std::string& ctrl_file, double dist_time,
                 double dist_mag) {
    const Fotf plant = load([&] { return load_plant(plant_file); }, "plant file");
    const FopidParams c = load([&] { return load_controller(ctrl_file); }, "controller file");
    const ClosedLoop loop = closed_loop_realize(plant, c, s.sim);
    std::optional<Disturbance> d;
    if (dist_mag != 0.0) d = Disturbance{dist_time, dist_mag};
    const SimResult r = simulate_step(loop, s.sim, d);
    export_csv(r, out_path(s, "step.csv"));
    const StepMetrics m = step_metrics(r);
    std::cout << "stable " << is_stable(loop.S) << "  overshoot % " << m.mp_pct << "  rise 10-90 % " << m.t_r
              << "  settling 2 % " << m.t_s << (r.overflow ? "  (overflow)" : "") << '\n';
    return kOk;
}

int cmd_analyze(const Settings& s, const std::string& what, const std::string& plant_file, const std::string& ctrl_file,
                double lo, double hi, std::size_t points, const std::vector<double>& gains) {
    const Fotf plant = load([&] { return load_plant(plant_file); }, "plant file");
    const FopidParams c = load([&] { return load_controller(ctrl_file); }, "controller file");
    if (!(lo > 0 && hi > lo) || points < 2) throw InputError("need 0 < omega-lo < omega-hi and points >= 2");
    const Fotf loop = series(fopid_to_fotf(c), plant);
    if (what == "bode") {
        const FrequencyCurve b = bode_curve(loop, lo, hi, points);
        export_csv(b, out_path(s, "bode.csv"));
        std::cout << "wrote " << b.omega.size() << " points, " << b.gaps.size() << " gaps\n";
    } else if (what == "sens") {
        const SensitivityCurves sc = sensitivity_curves(loop, lo, hi, points);
        export_csv(sc.S, out_path(s, "sens_S.csv"));
        export_csv(sc.T, out_path(s, "sens_T.csv"));
        std::cout << "near-singular points: " << sc.near_singular.size() << '\n';
    } else if (what == "step") {
        const SimResult r = simulate_step(closed_loop_realize(plant, c, s.sim), s.sim);
        export_csv(r, out_path(s, "step.csv"));
        const StepMetrics m = step_metrics(r);
        std::cout << "overshoot % " << m.mp_pct << "  rise 10-90 % " << m.t_r << "  settling 2 % " << m.t_s << '\n';
    } else {
        const GainSweepReport rep = iso_damping_sweep(plant, c, gains, s.sim);
        export_csv(rep, out_path(s, "sweep.csv"));
        for (std::size_t i = 0; i < rep.gains.size(); ++i) {
            std::cout << "k " << rep.gains[i] << "  stable " << rep.stable[i] << "  overshoot % " << rep.metrics[i].mp_pct
                      << '\n';
        }
        std::cout << "overshoot spread " << overshoot_spread(rep) << '\n';
    }
    return kOk;
}

int cmd_reproduce(const Settings& s, const std::vector<int>& tables) {
    ReproOptions opt;
    opt.sim = s.sim;
    opt.fit.seed = s.seed;
    bool pass = true;
    for (int t : tables) {
        const ReproReport r = reproduce_table(t, opt);
        std::cout << format_report(r) << std::flush;
        pass = pass && r.all_primary_pass();
    }
    return pass ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional-order PID tuning toolkit"};
    app.require_subcommand(1);
    Settings s;

    std::string plant_file, model_file, ctrl_file, tmpl = "rank", index = "iae", analysis_kind;
    FreqSpec spec;
    std::vector<double> bounds, gains = kDefaultSweepGains;
    std::vector<int> tables{1, 2, 3, 4, 5, 6, 7};
    double dist_time = 25.0, dist_mag = 0.0, w_lo = 1e-3, w_hi = 1e3;
    std::size_t points = 400;

    auto* reduce = app.add_subcommand("reduce", "fit reduced templates to a plant");
    add_common(reduce, s);
    reduce->add_option("--plant", plant_file, "plant definition file")->required()->check(CLI::ExistingFile);
    reduce->add_option("--template", tmpl, "foptd|soptd|nioptd1|nioptd2|rank")
        ->check(CLI::IsMember({"foptd", "soptd", "nioptd1", "nioptd2", "rank"}));
    reduce->add_option("--starts", s.starts, "multi-start count");

    auto* tf = app.add_subcommand("tune-freq", "frequency-domain FOPID design on a reduced model");
    add_common(tf, s);
    tf->add_option("--model", model_file, "reduced model file")->required()->check(CLI::ExistingFile);
    tf->add_option("--phase-margin-deg", spec.phi_m_deg, "phase margin (deg)");
    tf->add_option("--gain-crossover", spec.omega_gc, "gain crossover frequency (rad/s)");
    tf->add_option("--t-cap-db", spec.A_db, "complementary sensitivity level (dB)");
    tf->add_option("--t-cap-freq", spec.omega_t, "frequency of the T level (rad/s)");
    tf->add_option("--s-cap-db", spec.B_db, "sensitivity level (dB)");
    tf->add_option("--s-cap-freq", spec.omega_s, "frequency of the S level (rad/s)");
    tf->add_option("--starts", s.starts, "restart count");

    auto* tt = app.add_subcommand("tune-time", "time-domain FOPID tuning by index minimization");
    add_common(tt, s);
    add_sim(tt, s);
    tt->add_option("--plant", plant_file, "plant definition file")->required()->check(CLI::ExistingFile);
    tt->add_option("--index", index, "iae|itae|ise|itse|istes|istse|sum|all")
        ->check(CLI::IsMember({"iae", "itae", "ise", "itse", "istes", "istse", "sum", "all"}, CLI::ignore_case));
    tt->add_option("--bounds", bounds, "gain_lo,gain_hi,order_lo,order_hi")->expected(4)->delimiter(',');
    tt->add_option("--starts", s.starts, "multi-start count");

    auto* sim = app.add_subcommand("simulate", "closed-loop step simulation");
    add_common(sim, s);
    add_sim(sim, s);
    sim->add_option("--plant", plant_file, "plant definition file")->required()->check(CLI::ExistingFile);
    sim->add_option("--controller", ctrl_file, "controller file")->required()->check(CLI::ExistingFile);
    sim->add_option("--disturbance-time", dist_time, "load disturbance time (s)");
    sim->add_option("--disturbance", dist_mag, "load disturbance magnitude at the plant input");

    auto* an = app.add_subcommand("analyze", "Bode, sensitivity, step and gain-sweep data");
    add_common(an, s);
    add_sim(an, s);
    an->add_option("kind", analysis_kind, "bode|sens|step|sweep")->required()->check(CLI::IsMember({"bode", "sens", "step", "sweep"}));
    an->add_option("--plant", plant_file, "plant definition file")->required()->check(CLI::ExistingFile);
    an->add_option("--controller", ctrl_file, "controller file")->required()->check(CLI::ExistingFile);
    an->add_option("--omega-lo", w_lo, "lowest frequency (rad/s)");
    an->add_option("--omega-hi", w_hi, "highest frequency (rad/s)");
    an->add_option("--points", points, "frequency points");
    an->add_option("--gains", gains, "loop-gain multipliers for sweep");

    auto* rep = app.add_subcommand("reproduce", "compare computed results with the bundled reference tables");
    add_common(rep, s);
    add_sim(rep, s);
    rep->add_option("--tables", tables, "tables to run (1-7)")->check(CLI::Range(1, 7))->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        CLI::App* used = app.get_subcommands().front();
        finalize(s, *used);
        if (used == reduce) return cmd_reduce(s, plant_file, tmpl);
        if (used == tf) return cmd_tune_freq(s, model_file, spec);
        if (used == tt) return cmd_tune_time(s, plant_file, index, bounds);
        if (used == sim) return cmd_simulate(s, plant_file, ctrl_file, dist_time, dist_mag);
        if (used == an) {
            for (double g : gains) {
                if (!(g > 0)) throw InputError("--gains must be positive");
            }
            return cmd_analyze(s, analysis_kind, plant_file, ctrl_file, w_lo, w_hi, points, gains);
        }
        if (used == rep) return cmd_reproduce(s, tables);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }
    return kInput;
}
