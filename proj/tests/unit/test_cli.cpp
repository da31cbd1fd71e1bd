#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "fopid/reproduce.hpp"

namespace fs = std::filesystem;
using namespace fopid;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fopid_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(FOPID_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string plant(const std::string& name) { return data_dir() + "/plants/" + name + ".json"; }

}  // namespace

TEST(Cli, MissingPlantIsInputError) {
    const fs::path out = scratch("missing");
    EXPECT_EQ(run("reduce --plant /nonexistent.json --out " + out.string()), 1);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, InvalidConfigWritesNothing) {
    const fs::path out = scratch("badcfg");
    const fs::path cfg = fs::temp_directory_path() / "fopid_cli" / "bad_config.json";
    std::ofstream(cfg) << R"({"sim": {"dt": -1}})";
    EXPECT_EQ(run("simulate --plant " + plant("P2") + " --controller " + plant("P2") + " --config " +
                  cfg.string() + " --out " + out.string()),
              1);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, RankPrefersNioptd2OnP1) {
    const fs::path out = scratch("rank");
    ASSERT_EQ(run("reduce --plant " + plant("P1") + " --template rank --out " + out.string()), 0);
    const Json model = read_json((out / "model.json").string());
    EXPECT_EQ(model.at("template"), "nioptd2");
    EXPECT_EQ(read_json((out / "reduce_report.json").string()).size(), 4u);
}

TEST(Cli, TemplateFormPlantFitsExactly) {
    const fs::path out = scratch("exact");
    fs::create_directories(out);
    const fs::path p = out / "plant.json";
    write_json(plant_to_json(to_fotf(Foptd{1.0, 2.0, 0.5})), p.string());
    ASSERT_EQ(run("reduce --plant " + p.string() + " --template foptd --out " + out.string()), 0);
    EXPECT_LT(read_json((out / "model.json").string()).at("j_f").get<double>(), 1e-4);
}

TEST(Cli, SameSeedGivesIdenticalFiles) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(run("reduce --plant " + plant("P3") + " --template nioptd1 --seed 5 --out " + a.string()), 0);
    ASSERT_EQ(run("reduce --plant " + plant("P3") + " --template nioptd1 --seed 5 --out " + b.string()), 0);
    for (const char* f : {"model.json", "reduce_report.json", "reduce_magnitude.csv"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(Cli, TuneFreqOnP2MatchesListedController) {
    const fs::path out = scratch("tunefreq");
    const int code = run("tune-freq --model " + data_dir() + "/models/P2_nioptd2.json --phase-margin-deg 80 " +
                         "--gain-crossover 1.0 --out " + out.string());
    EXPECT_EQ(code, 0);
    ASSERT_TRUE(fs::exists(out / "controller.json"));
    const FopidParams c = load_controller((out / "controller.json").string());
    const FopidParams ref = reference_freq_controller("P2");
    const RealVector x = c.to_vector(), y = ref.to_vector();
    EXPECT_TRUE(((x - y).cwiseAbs().array() <= 0.15 * y.cwiseAbs().array()).all());
}

TEST(Cli, TuneTimeOnP4Istes) {
    const fs::path out = scratch("tunetime");
    ASSERT_EQ(run("tune-time --plant " + plant("P4") + " --index istes --out " + out.string()), 0);
    const CsvTable t = read_csv((out / "tune_time_table.csv").string());
    EXPECT_LE(t.columns[1][0], 1.10 * 2.9197);
    EXPECT_NEAR(t.columns[7][0], 1.0, 1.0);
    EXPECT_TRUE(fs::exists(out / "step.csv"));
    EXPECT_TRUE(fs::exists(out / "controller.json"));
}

TEST(Cli, AnalyzeSweepAtUnitGain) {
    const fs::path out = scratch("sweep");
    fs::create_directories(out);
    const fs::path c = out / "c.json";
    write_json(controller_to_json(reference_freq_controller("P2")), c.string());
    ASSERT_EQ(run("analyze sweep --plant " + plant("P2") + " --controller " + c.string() + " --gains 1 --out " +
                  out.string()),
              0);
    const CsvTable t = read_csv((out / "sweep.csv").string());
    const SimConfig cfg;
    const StepMetrics m =
        step_metrics(simulate_step(closed_loop_realize(bundled_plant("P2"), reference_freq_controller("P2"), cfg), cfg));
    ASSERT_EQ(t.columns[0].size(), 1u);
    EXPECT_EQ(t.columns[1][0], m.mp_pct);
}

TEST(Cli, ReproduceTableOnePasses) {
    EXPECT_EQ(run("reproduce --tables 1"), 0);
}

TEST(Cli, BadTableNumberIsUsageError) {
    EXPECT_EQ(run("reproduce --tables 9"), 1);
}
