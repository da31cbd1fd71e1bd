#include "fopid/reproduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fopid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ReproRow at_most(std::string label, double computed, double reference, double limit, std::string note = {}) {
    return {std::move(label), computed, reference, limit, computed <= limit, true, std::move(note)};
}

ReproRow info(std::string label, double computed, double reference, std::string note = {}) {
    return {std::move(label), computed, reference, std::numeric_limits<double>::quiet_NaN(), true, false,
            std::move(note)};
}

std::string params_note(const std::vector<std::string>& names, const std::vector<double>& values) {
    std::ostringstream s;
    s.precision(5);
    for (std::size_t i = 0; i < names.size(); ++i) s << (i ? " " : "") << names[i] << "=" << values[i];
    return s.str();
}

std::string controller_note(const FopidParams& c) {
    return params_note({"Kp", "Ki", "Kd", "lambda", "mu"}, {c.Kp, c.Ki, c.Kd, c.lambda, c.mu});
}

double db(double x) { return 20.0 * std::log10(x); }

ReproReport table1(const ReproOptions& opt) {
    ReproReport r;
    r.table = 1;
    const Json& ref = reference_data().at("table1");
    const auto t0 = Clock::now();
    for (const auto& name : kPlantNames) {
        const auto ranking = rank_templates(bundled_plant(name), opt.fit);
        for (TemplateKind k : kAllTemplates) {
            const double published = ref.at(name).at(to_string(k)).at("j_f").get<double>();
            const auto it = std::find_if(ranking.begin(), ranking.end(), [&](const RankEntry& e) { return e.kind == k; });
            const double jf = it->fit ? it->fit->j_f : std::numeric_limits<double>::infinity();
            r.rows.push_back(at_most(name + " " + to_string(k) + " j_f", jf, published, 1.10 * published,
                                     it->fit ? params_note(parameter_names(k), parameters(it->fit->model)) : it->error));
        }
        const bool first = ranking.front().fit && ranking.front().kind == TemplateKind::Nioptd2;
        r.rows.push_back({name + " preferred template is nioptd2", first ? 1.0 : 0.0, 1.0, 1.0, first, true,
                          "winner " + to_string(ranking.front().kind)});
    }
    r.seconds = seconds_since(t0);
    r.rows.push_back(at_most("runtime (s)", r.seconds, 300.0, 300.0));
    return r;
}

ReproReport table2(const ReproOptions& opt) {
    ReproReport r;
    r.table = 2;
    const Json& ref = reference_data().at("table2");
    const Json& ref1 = reference_data().at("table1");
    const auto t0 = Clock::now();
    for (const auto& name : kPlantNames) {
        const Fotf plant = bundled_plant(name);
        for (TemplateKind k : kAllTemplates) {
            const ReducedModel published = model_from_json(ref.at(name).at(to_string(k)));
            const double jf_published = h2_mismatch(plant, published, opt.fit.h2);
            r.rows.push_back(info(name + " " + to_string(k) + " j_f of listed model", jf_published,
                                  ref1.at(name).at(to_string(k)).at("j_f").get<double>(),
                                  params_note(parameter_names(k), parameters(published))));
        }
    }
    r.seconds = seconds_since(t0);
    return r;
}

ReproReport table3(const ReproOptions& opt) {
    ReproReport r;
    r.table = 3;
    const auto t0 = Clock::now();
    int matches = 0;
    for (const auto& name : kPlantNames) {
        const Fotf model = to_fotf(bundled_model(name));
        const FreqSpec spec = reference_spec(name);
        const FopidParams listed = reference_freq_controller(name);
        const SpecResiduals rl = spec_residuals(listed, model, spec);
        const char* names[] = {"r1 phase (rad)", "r2 gain", "r3 phase slope"};
        for (int i = 0; i < 3; ++i) {
            r.rows.push_back(at_most(name + " listed controller |" + names[i] + "|", std::abs(rl[static_cast<std::size_t>(i)]),
                                     0.0, 0.05, controller_note(listed)));
        }
        const TuningResult t = tune_frequency_domain(model, spec, std::nullopt, opt.freq);
        const double lim[] = {1e-6, 1e-6, 1e-6, 1e-4, 1e-4};
        const char* tn[] = {"r1 phase (rad)", "r2 gain", "r3 phase slope", "r4 T cap (dB)", "r5 S cap (dB)"};
        for (std::size_t i = 0; i < 5; ++i) {
            r.rows.push_back(at_most(name + " tuned |" + tn[i] + "|", std::abs(t.residuals[i]), 0.0, lim[i],
                                     i == 0 ? controller_note(t.params) + (t.caps_relaxed ? " (caps relaxed)" : "")
                                            : std::string{}));
        }
        const RealVector a = t.params.to_vector(), b = listed.to_vector();
        const double dev = ((a - b).cwiseAbs().array() / b.cwiseAbs().array()).maxCoeff();
        matches += dev <= 0.15 ? 1 : 0;
        r.rows.push_back(info(name + " tuned max relative parameter deviation", dev, 0.0));
        const auto G = [&](double w) { return controller_response(t.params, w) * freq_response(model, w); };
        const std::complex<double> gt = G(spec.omega_t), gs = G(spec.omega_s);
        r.rows.push_back(at_most(name + " tuned |T(j omega_t)| (dB)", db(std::abs(gt / (1.0 + gt))), spec.A_db, spec.A_db + 0.5));
        r.rows.push_back(at_most(name + " tuned |S(j omega_s)| (dB)", db(std::abs(1.0 / (1.0 + gs))), spec.B_db, spec.B_db + 0.5));
    }
    r.rows.push_back({"plants whose tuned parameters are within 15 %", static_cast<double>(matches), 3.0, 3.0, matches >= 3,
                      true, {}});
    r.seconds = seconds_since(t0);
    return r;
}

}  // namespace

bool ReproReport::all_primary_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReproRow& r) { return !r.primary || r.pass; });
}

const Json& reference_data() {
    static const Json data = read_json(data_dir() + "/reference.json");
    return data;
}

Fotf bundled_plant(const std::string& name) { return load_plant(data_dir() + "/plants/" + name + ".json"); }

ReducedModel bundled_model(const std::string& name) {
    return load_model(data_dir() + "/models/" + name + "_nioptd2.json");
}

FreqSpec reference_spec(const std::string& plant) {
    const Json& s = reference_data().at("table3").at(plant).at("spec");
    return {s.at("phi_m_deg").get<double>(), s.at("omega_gc").get<double>(), s.at("A_db").get<double>(),
            s.at("omega_t").get<double>(),   s.at("B_db").get<double>(),     s.at("omega_s").get<double>()};
}

FopidParams reference_freq_controller(const std::string& plant) {
    return controller_from_json(reference_data().at("table3").at(plant).at("controller"));
}

int time_table_for(const std::string& plant) {
    const auto it = std::find(kPlantNames.begin(), kPlantNames.end(), plant);
    if (it == kPlantNames.end()) throw std::invalid_argument("unknown plant " + plant);
    return 4 + static_cast<int>(it - kPlantNames.begin());
}

std::vector<TimeTuneResult> reproduce_time_results(const std::string& plant, const ReproOptions& opt) {
    return tune_all_indices(bundled_plant(plant), opt.sim, default_time_bounds(), opt.time);
}

ReproReport time_table_report(int table, const std::vector<TimeTuneResult>& results, double seconds,
                              const ReproOptions& opt) {
    ReproReport r;
    r.table = table;
    const Json& ref = reference_data().at("table" + std::to_string(table));
    const std::string plant = ref.at("plant").get<std::string>();
    const Fotf p = bundled_plant(plant);
    for (const auto& res : results) {
        const Json& row = ref.at("rows").at(to_string(res.index));
        const double published = row.at("j_min").get<double>();
        const std::string label = plant + " " + to_string(res.index);
        r.rows.push_back(at_most(label + " minimum", res.j_min, published, 1.10 * published,
                                 res.found ? controller_note(res.params) : res.message));
        const bool stable7 = res.found && independently_stable(p, res.params, opt.sim, 7);
        r.rows.push_back({label + " stable with order-7 Oustaloup", stable7 ? 1.0 : 0.0, 1.0, 1.0, stable7, true, {}});
        r.rows.push_back(info(label + " overshoot (%)", res.mp_pct, row.at("mp_pct").get<double>()));
        r.rows.push_back(info(label + " rise time 10-90 % (s)", res.t_r, row.at("t_r").get<double>()));
        if (plant == "P2" && res.index == IndexKind::IAE) {
            r.rows.push_back(at_most(label + " overshoot bound (%)", res.mp_pct, row.at("mp_pct").get<double>(), 3.0));
        }
    }
    r.seconds = seconds;
    r.rows.push_back(at_most("runtime (s)", seconds, 300.0, 300.0));
    return r;
}

ReproReport reproduce_table(int table, const ReproOptions& opt) {
    switch (table) {
        case 1: return table1(opt);
        case 2: return table2(opt);
        case 3: return table3(opt);
        case 4:
        case 5:
        case 6:
        case 7: {
            const std::string plant = kPlantNames[static_cast<std::size_t>(table - 4)];
            const auto t0 = Clock::now();
            const auto results = reproduce_time_results(plant, opt);
            return time_table_report(table, results, seconds_since(t0), opt);
        }
        default: throw std::invalid_argument("table must be between 1 and 7");
    }
}

std::string format_report(const ReproReport& r) {
    std::ostringstream out;
    out << "== table " << r.table << " ==\n";
    char buf[512];
    for (const auto& row : r.rows) {
        const char* status = !row.primary ? "info" : (row.pass ? "PASS" : "FAIL");
        if (row.primary) {
            std::snprintf(buf, sizeof buf, "%-4s  %-52s computed %-12.6g reference %-12.6g limit %-10.4g", status,
                          row.label.c_str(), row.computed, row.reference, row.limit);
        } else {
            std::snprintf(buf, sizeof buf, "%-4s  %-52s computed %-12.6g reference %-12.6g", status, row.label.c_str(),
                          row.computed, row.reference);
        }
        out << buf;
        if (!row.note.empty()) out << "  " << row.note;
        out << '\n';
    }
    return out.str();
}

}  // namespace fopid
