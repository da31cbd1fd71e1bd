#ifndef FOPID_IO_HPP
#define FOPID_IO_HPP

#include <string>

#include <json.hpp>

#include "fopid/freq_tuner.hpp"
#include "fopid/model_reduction.hpp"

namespace fopid {

using Json = nlohmann::json;

/// Plant definitions, either
///   {"form": "factored", "gain": k, "numerator": [[...], ...], "denominator": [[...], ...], "delay": L}
/// with each factor a descending coefficient list, or
///   {"form": "terms", "num": [{"coeff": c, "exponent": a}, ...], "den": [...], "delay": L}.
Fotf plant_from_json(const Json& j);
Json plant_to_json(const Fotf& g);
Fotf load_plant(const std::string& path);

/// {"template": "nioptd2", "parameters": {"K": ..., ...}} plus optional fit fields.
ReducedModel model_from_json(const Json& j);
Json model_to_json(const ReducedModel& m);
Json fit_to_json(const FitResult& r);
ReducedModel load_model(const std::string& path);

/// {"Kp": ..., "Ki": ..., "Kd": ..., "lambda": ..., "mu": ...}
FopidParams controller_from_json(const Json& j);
Json controller_to_json(const FopidParams& c);
FopidParams load_controller(const std::string& path);

Json read_json(const std::string& path);
/// Pretty-printed, newline-terminated.
void write_json(const Json& j, const std::string& path);

/// Directory holding the bundled plants, models and reference values.
std::string data_dir();

}  // namespace fopid

#endif  // FOPID_IO_HPP
