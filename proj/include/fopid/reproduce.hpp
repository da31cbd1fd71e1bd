#ifndef FOPID_REPRODUCE_HPP
#define FOPID_REPRODUCE_HPP

#include <string>
#include <vector>

#include "fopid/analysis.hpp"
#include "fopid/io.hpp"

namespace fopid {

/// One computed-versus-reference comparison. Rows with primary = false are
/// informational and never fail a run.
struct ReproRow {
    std::string label;
    double computed = 0.0;
    double reference = 0.0;
    double limit = 0.0;
    bool pass = true;
    bool primary = true;
    std::string note;
};

struct ReproReport {
    int table = 0;
    std::vector<ReproRow> rows;
    double seconds = 0.0;

    bool all_primary_pass() const;
};

struct ReproOptions {
    FitOptions fit;
    FreqTuneOptions freq;
    TimeTuneOptions time;
    SimConfig sim;
};

/// Bundled test plants P1..P4 and their published NIOPTD-II models.
Fotf bundled_plant(const std::string& name);
ReducedModel bundled_model(const std::string& name);
const Json& reference_data();

inline const std::vector<std::string> kPlantNames{"P1", "P2", "P3", "P4"};

/// Published specification for a plant's frequency-domain design.
FreqSpec reference_spec(const std::string& plant);
FopidParams reference_freq_controller(const std::string& plant);

/// Time-domain tables are indexed 4..7 for P1..P4.
int time_table_for(const std::string& plant);

ReproReport reproduce_table(int table, const ReproOptions& opt = {});

/// Tuned time-domain results for one plant, as used by the time tables.
std::vector<TimeTuneResult> reproduce_time_results(const std::string& plant, const ReproOptions& opt = {});
ReproReport time_table_report(int table, const std::vector<TimeTuneResult>& results, double seconds,
                              const ReproOptions& opt = {});

std::string format_report(const ReproReport& r);

}  // namespace fopid

#endif  // FOPID_REPRODUCE_HPP
