#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fsys = std::filesystem;

namespace {

const char* kConfig = R"({
  "design": {"total_n": 300, "endpoint": {"kind": "binary"},
             "subgroups": [{"population_proportion": 0.6, "control_param": 0.3, "treatment_effect": 0.4},
                           {"population_proportion": 0.4, "control_param": 0.3, "treatment_effect": 0.65}]},
  "shift_grid": [[0.6, 0.4], [0.7, 0.3]SHIFT],
  "estimators": [{"kind": "unadjusted"}, {"kind": "naive_post_strat"}],
  "rules": [{"kind": "posterior_prob"}],
  "replicates": 25,
  "master_seed": 9
})";

fsys::path dir_for(const std::string& name) {
  const auto p = fsys::temp_directory_path() / ("futilsim_cli_" + name);
  fsys::remove_all(p);
  fsys::create_directories(p);
  return p;
}

fsys::path write_config(const fsys::path& dir, const std::string& extra_shift = "") {
  std::string text = kConfig;
  text.replace(text.find("SHIFT"), 5, extra_shift);
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(FUTILSIM_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fsys::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run succeeds and is byte-identical across worker counts") {
  const auto d = dir_for("run");
  const auto cfg = write_config(d);
  std::string first;
  for (const char* w : {"1", "2", "8"}) {
    const auto out = d / (std::string("w") + w);
    REQUIRE(run("run --config " + cfg.string() + " --out " + out.string() + " --workers " + w) == 0);
    const auto all = slurp(out / "rows.csv") + slurp(out / "aggregates.csv") + slurp(out / "provenance.json");
    if (first.empty()) first = all;
    CHECK(all == first);
  }
}

TEST_CASE("worker default from the environment") {
  const auto d = dir_for("env");
  const auto cfg = write_config(d);
  const std::string cmd = "FUTILSIM_WORKERS=3 " + std::string(FUTILSIM_EXE) + " run --config " + cfg.string() +
                          " --out " + (d / "o").string() + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fsys::exists(d / "o" / "aggregates.csv"));
}

TEST_CASE("seed override changes provenance") {
  const auto d = dir_for("seed");
  const auto cfg = write_config(d);
  REQUIRE(run("run --config " + cfg.string() + " --out " + (d / "a").string() + " --seed 77") == 0);
  CHECK(slurp(d / "a" / "provenance.json").find("\"master_seed\": 77") != std::string::npos);
}

TEST_CASE("config errors exit with 1") {
  const auto d = dir_for("bad");
  std::ofstream(d / "typo.json") << R"({"shift_grid": [], "replicatez": 3})";
  CHECK(run("run --config " + (d / "typo.json").string() + " --out " + (d / "o").string()) == 1);
  CHECK(run("run --config " + (d / "missing.json").string() + " --out " + (d / "o").string()) == 1);
  CHECK(run("run --out " + (d / "o").string()) == 1);
  CHECK(run("reproduce fig4 --out " + (d / "o").string()) == 1);
  CHECK(run("frobnicate") == 1);
}

TEST_CASE("failed cells exit with 2 and keep partial output") {
  const auto d = dir_for("partial");
  const auto cfg = write_config(d, ", [1.0, 0.0]");
  CHECK(run("run --config " + cfg.string() + " --out " + (d / "o").string()) == 2);
  CHECK(fsys::exists(d / "o" / "rows.csv"));
  CHECK(fsys::exists(d / "o" / "aggregates.csv"));
}

TEST_CASE("screen on a cohort dump") {
  const auto d = dir_for("screen");
  const auto cfg = write_config(d);
  REQUIRE(run("cohort --config " + cfg.string() + " --shift 1 --out " + (d / "cohort.csv").string()) == 0);
  const std::string cmd = std::string(FUTILSIM_EXE) + " screen --data " + (d / "cohort.csv").string() +
                          " --ia-col in_ia --vars subgroup,site --b 199 --alpha 0.05 > " +
                          (d / "screen.txt").string() + " 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(slurp(d / "screen.txt").find("subgroup") != std::string::npos);
  CHECK(run("screen --data " + (d / "cohort.csv").string() + " --ia-col in_ia --vars age") != 0);
}

TEST_CASE("tune-cutoff, curves and reproduce") {
  const auto d = dir_for("misc");
  CHECK(run("curves shrinkage --out " + (d / "c").string()) == 0);
  CHECK(fsys::exists(d / "c" / "shrinkage.csv"));
  CHECK(run("reproduce fig1 --replicates 10 --out " + (d / "f").string()) == 0);
  CHECK(fsys::exists(d / "f" / "fig1.csv"));
  const auto cfg = write_config(d);
  // binary endpoint: the cutoff curve needs a continuous scenario
  CHECK(run("tune-cutoff --config " + cfg.string() + " --grid 0,5,10") == 1);
}

}  // TEST_SUITE
