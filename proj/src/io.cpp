#include "fopid/io.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace fopid {

namespace {

double number(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw std::invalid_argument(std::string("missing or non-numeric field '") + key + "'");
    }
    return j.at(key).get<double>();
}

std::vector<double> product_of_factors(const Json& factors) {
    std::vector<double> p{1.0};
    if (!factors.is_array()) throw std::invalid_argument("factor list must be an array");
    for (const auto& f : factors) {
        const auto c = f.get<std::vector<double>>();
        if (c.empty() || c.size() > 3) throw std::invalid_argument("factors must be first or second order");
        p = poly_mul(p, c);
    }
    return p;
}

FracPoly terms_from_json(const Json& arr) {
    if (!arr.is_array() || arr.empty()) throw std::invalid_argument("term list must be a non-empty array");
    std::vector<FracTerm> terms;
    for (const auto& t : arr) terms.push_back({number(t, "coeff"), number(t, "exponent")});
    return FracPoly(std::move(terms));
}

Json terms_to_json(const FracPoly& p) {
    Json arr = Json::array();
    for (const auto& t : p.terms()) arr.push_back({{"coeff", t.coeff}, {"exponent", t.exponent}});
    return arr;
}

}  // namespace

Fotf plant_from_json(const Json& j) {
    const std::string form = j.value("form", "terms");
    const double delay = j.value("delay", 0.0);
    if (form == "factored") {
        const double k = number(j, "gain");
        auto num = product_of_factors(j.value("numerator", Json::array()));
        for (auto& c : num) c *= k;
        const auto den = product_of_factors(j.at("denominator"));
        return Fotf(FracPoly::from_coefficients(num), FracPoly::from_coefficients(den), delay);
    }
    if (form == "terms") return Fotf(terms_from_json(j.at("num")), terms_from_json(j.at("den")), delay);
    throw std::invalid_argument("unknown plant form '" + form + "'");
}

Json plant_to_json(const Fotf& g) {
    return {{"form", "terms"}, {"num", terms_to_json(g.num)}, {"den", terms_to_json(g.den)}, {"delay", g.delay}};
}

ReducedModel model_from_json(const Json& j) {
    const TemplateKind kind = parse_template_kind(j.at("template").get<std::string>());
    const Json& params = j.at("parameters");
    std::vector<double> p;
    for (const auto& name : parameter_names(kind)) p.push_back(number(params, name.c_str()));
    ReducedModel m = from_parameters(kind, p);
    validate(m);
    return m;
}

Json model_to_json(const ReducedModel& m) {
    const TemplateKind kind = kind_of(m);
    Json params = Json::object();
    const auto names = parameter_names(kind);
    const auto values = parameters(m);
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[i];
    return {{"template", to_string(kind)}, {"parameters", params}};
}

Json fit_to_json(const FitResult& r) {
    Json j = model_to_json(r.model);
    j["j_f"] = r.j_f;
    j["truncation_estimate"] = r.truncation_estimate;
    j["evaluations"] = r.evaluations;
    j["converged"] = r.converged;
    return j;
}

ReducedModel load_model(const std::string& path) { return model_from_json(read_json(path)); }

FopidParams controller_from_json(const Json& j) {
    FopidParams c{number(j, "Kp"), number(j, "Ki"), number(j, "Kd"), number(j, "lambda"), number(j, "mu")};
    c.validate();
    return c;
}

Json controller_to_json(const FopidParams& c) {
    return {{"Kp", c.Kp}, {"Ki", c.Ki}, {"Kd", c.Kd}, {"lambda", c.lambda}, {"mu", c.mu}};
}

FopidParams load_controller(const std::string& path) { return controller_from_json(read_json(path)); }

Fotf load_plant(const std::string& path) { return plant_from_json(read_json(path)); }

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
    }
}

void write_json(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string data_dir() {
    if (const char* env = std::getenv("FOPID_DATA_DIR")) return env;
    return FOPID_DATA_DIR;
}

}  // namespace fopid
