#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "app.hpp"
#include "cli.hpp"
#include "glass/io.hpp"
#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace glass;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "glass_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = app::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("unknown config key reports source and line") {
  const std::string yaml = "seed: 3\nfit:\n  iterations: 10\n  stepsize: 0.1\n";
  try {
    app::parse_config(yaml, "run.yaml");
    FAIL("expected ConfigError");
  } catch (const app::ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("run.yaml:4") != std::string::npos);
    CHECK(what.find("stepsize") != std::string::npos);
  }
}

TEST_CASE("ill-typed config value is rejected") {
  CHECK_THROWS_AS(app::parse_config("fit:\n  iterations: many\n", "x.yaml"), app::ConfigError);
  CHECK_THROWS_AS(app::parse_config("model:\n  tau: -1\n", "x.yaml").validate(), app::ConfigError);
  CHECK_NOTHROW(app::parse_config("model:\n  tau: auto\n", "x.yaml").validate());
}

TEST_CASE("emitted config parses back to the same document") {
  for (const auto& name : app::preset_names()) {
    const app::RunConfig cfg = app::preset_config(name);
    const std::string text = app::emit_config(cfg);
    CHECK(app::emit_config(app::parse_config(text, name)) == text);
  }
  app::RunConfig tuned = app::preset_config("sim2-moderate");
  tuned.tau = 0.125;
  tuned.shrinkage_ratios = {0.0, 0.5, 2.0};
  tuned.fit.iterations = 17;
  const std::string text = app::emit_config(tuned);
  const app::RunConfig back = app::parse_config(text, "round");
  CHECK(back.tau == tuned.tau);
  CHECK(back.shrinkage_ratios == tuned.shrinkage_ratios);
  CHECK(back.fit.iterations == 17);
}

TEST_CASE("config errors exit with code 2") {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "bad.yaml") << "seed: 1\nsimulate:\n  channels: 4\n";
  const Run bad = cli({"simulate", "--config", (dir / "bad.yaml").string(), "--out", (dir / "out").string()});
  CHECK(bad.code == app::kExitConfig);
  CHECK(bad.err.find("bad.yaml:3") != std::string::npos);

  CHECK(cli({"simulate", "--preset", "no-such-preset", "--out", (dir / "out").string()}).code == app::kExitConfig);
  CHECK(cli({"fit", "--iterations", "-3", "--data", "x", "--out", "y"}).code == app::kExitConfig);
  CHECK(cli({"frobnicate"}).code == app::kExitConfig);
}

TEST_CASE("version flag") {
  const Run run = cli({"--version"});
  CHECK(run.code == app::kExitOk);
  CHECK(run.out.find(std::string("glass ") + GLASS_VERSION_STRING) != std::string::npos);
}

TEST_CASE("zero iterations returns the initialization and shape mismatch exits with code 4") {
  const fs::path dir = scratch("fit");
  write_dataset(testing::random_dataset(3, 6, 40, 11), dir / "train.glass");
  write_dataset(testing::random_dataset(4, 6, 4, 12), dir / "other.glass");

  const Run fit = cli({"fit", "--iterations", "0", "--tau", "0.1", "--draws", "20", "--data",
                       (dir / "train.glass").string(), "--out", (dir / "fit").string()});
  REQUIRE(fit.code == app::kExitOk);
  CHECK(fs::exists(dir / "fit" / "resolved_config.yaml"));
  CHECK(fs::exists(dir / "fit" / "VERSION"));
  const Checkpoint model = read_checkpoint(dir / "fit" / "model.json");
  CHECK(model.num_channels() == 3);
  CHECK(model.num_samples() == 6);
  CHECK(model.hyper.tau == 0.1);
  for (double v : model.xi.beta_mean) CHECK(std::abs(v) < 0.1);
  for (double v : model.xi.delta_logit) CHECK(v == 0.0);
  for (double v : model.xi.beta_rawscale) CHECK(softplus(v) == doctest::Approx(0.1).epsilon(1e-12));

  const Run mismatch = cli({"predict", "--model", (dir / "fit").string(), "--data", (dir / "other.glass").string(),
                            "--out", (dir / "pred").string()});
  CHECK(mismatch.code == app::kExitDimension);
  CHECK(mismatch.err.find("4") != std::string::npos);

  const Run ok = cli({"predict", "--model", (dir / "fit").string(), "--data", (dir / "train.glass").string(),
                      "--out", (dir / "pred").string()});
  CHECK(ok.code == app::kExitOk);
  CHECK(fs::exists(dir / "pred" / "predictions.csv"));
  CHECK(fs::exists(dir / "pred" / "decoded.csv"));
}
