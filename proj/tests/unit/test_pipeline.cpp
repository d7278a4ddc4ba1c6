#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <json.hpp>
#include <map>
#include <sstream>

#include "vcas/cli.hpp"
#include "vcas/container.hpp"

using namespace vcas;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "vcas");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) FAIL_CHECK(err.str());
  return code;
}

// Small end-to-end run; returns every artifact keyed by its relative path.
std::map<std::string, std::string> pipeline(const fs::path& out, const std::string& seed) {
  fs::remove_all(out);
  const std::vector<std::string> common{"--out", out.string(), "--seed", seed, "--set", "epochs=8", "--set",
                                        "train_per_class=6", "--set", "test_per_class=3", "--set",
                                        "condition_per_class=2", "--set", "train_sessions=2"};
  auto with = [&](std::vector<std::string> tail) {
    std::vector<std::string> a = common;
    a.insert(a.end(), tail.begin(), tail.end());
    return a;
  };
  for (const std::string task : {"object", "pose", "contact"}) {
    REQUIRE(run(with({"--task", task, "synth-data"})) == 0);
    for (const std::string band : {"full", "low", "high"}) {
      REQUIRE(run(with({"--task", task, "--band", band, "--set", "n_components=4", "train"})) == 0);
      REQUIRE(run(with({"--task", task, "--band", band, "eval"})) == 0);
    }
  }
  REQUIRE(run(with({"sim", "demos", "--episodes", "40"})) == 0);
  REQUIRE(run(with({"sim", "train-policy"})) == 0);
  REQUIRE(run(with({"--set", "obs=" + (out / "contact" / "observation_model_full.csv").string(), "sim",
                    "eval-policy", "--episodes", "30"})) == 0);
  REQUIRE(run(with({"report", out.string()})) == 0);

  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), out).generic_string()] = io::read_file(e.path());
  }
  return files;
}

}  // namespace

TEST_CASE("the pipeline is byte-for-byte reproducible", "[pipeline]") {
  const fs::path root = fs::temp_directory_path() / "vcas_test_pipeline";
  const auto a = pipeline(root / "a", "11");
  const auto b = pipeline(root / "b", "11");

  REQUIRE(a.size() == b.size());
  for (const auto& [name, bytes] : a) {
    INFO(name);
    REQUIRE(b.count(name) == 1);
    CHECK(b.at(name) == bytes);
  }
  for (const char* expected :
       {"object/model_full.vcas", "object/model_low.vcas", "object/eval_high.json", "object/manifest.json",
        "object/explained_variance_full.csv", "object/training_curve_full.csv", "object/train_metrics_full.json",
        "pose/pose_errors_full.csv", "contact/observation_model_full.csv", "sim/demos.jsonl", "sim/policy.vcas",
        "sim/eval_policy.json", "sim/eval_policy.csv", "sim/failures.jsonl", "summary.md", "summary.csv"}) {
    CHECK(a.count(expected) == 1);
  }

  const auto c = pipeline(root / "c", "12");
  CHECK(c.at("object/train/session_00.vcas") != a.at("object/train/session_00.vcas"));
  CHECK(c.at("sim/demos.jsonl") != a.at("sim/demos.jsonl"));
}

TEST_CASE("band models see only their band's bins", "[pipeline]") {
  const fs::path out = fs::temp_directory_path() / "vcas_test_pipeline" / "a";
  const auto low = io::task_model_from(io::read_container(out / "object" / "model_low.vcas"));
  const auto high = io::task_model_from(io::read_container(out / "object" / "model_high.vcas"));
  const auto full = io::task_model_from(io::read_container(out / "object" / "model_full.vcas"));
  const double bin_hz = 44100.0 / 42000.0;
  auto bins_in = [&](double lo, double hi, bool nyquist) {
    std::size_t n = 0;
    for (std::size_t k = 0; k <= 21000; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f >= lo && (f < hi || (nyquist && k == 21000))) ++n;
    }
    return n;
  };
  CHECK(low.kpca.input_dim() == bins_in(20.0, 9190.0, false));
  CHECK(high.kpca.input_dim() == bins_in(9190.0, 22050.0, true));
  CHECK(full.kpca.input_dim() == bins_in(20.0, 22050.0, true));
  CHECK(low.kpca.input_dim() + high.kpca.input_dim() == full.kpca.input_dim());

  const json metrics = json::parse(io::read_file(out / "object" / "train_metrics_low.json"));
  CHECK(metrics["band_label"] == "0.02-9.19 kHz");
  const json eval = json::parse(io::read_file(out / "contact" / "eval_full.json"));
  CHECK(eval["rows"][0]["condition"] == "in_distribution");
  CHECK(eval["rows"][0]["confusion"]["labels"] == json::array({"diagonal", "in_hole", "line"}));
}
