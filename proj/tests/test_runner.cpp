#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gsmote/config.hpp"
#include "gsmote/runner.hpp"
#include "temp_dir.hpp"

using namespace gsmote;
using nlohmann::json;

namespace {

json tiny_config() {
  return {{"variant", "gsmote_T"}, {"hidden_dim", 8},        {"max_epochs", 4},         {"synthetic_n", 60},
          {"synthetic_m", 3},      {"synthetic_d", 6},       {"majority_train_size", 6}, {"minority_count", 1},
          {"seeds", {0, 1}},       {"learning_rate", 0.01}};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GSMOTE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("config defaults and parsing") {
  const RunSpec d = run_spec_from_json(json::object());
  CHECK(d.experiment.variant == Variant::gsmote_preO);
  CHECK(d.experiment.lambda == 1e-6);
  CHECK(d.experiment.eta == 0.5);
  CHECK(d.experiment.mixup_config.b == 0.5);
  CHECK(d.experiment.mixup_config.threshold == 0.3);
  CHECK(d.experiment.mixup_config.lambda2 == 0.1);
  CHECK(d.dataset.is_synthetic());
  const RunSpec s = run_spec_from_json(tiny_config());
  CHECK(s.experiment.variant == Variant::gsmote_T);
  CHECK(s.seeds == std::vector<std::uint64_t>{0, 1});
  // Serialization round-trips.
  CHECK(run_spec_to_json(run_spec_from_json(run_spec_to_json(s))) == run_spec_to_json(s));
  json mix = tiny_config();
  mix["mixup"] = "mix";
  CHECK(run_spec_from_json(mix).experiment.mixup_config.use_pseudo);
  mix["mixup"] = "mix_prime";
  CHECK_FALSE(run_spec_from_json(mix).experiment.mixup_config.use_pseudo);
}

TEST_CASE("config errors") {
  auto bad = [](const char* key, json value) {
    json j = tiny_config();
    j[key] = std::move(value);
    CAPTURE(key);
    CHECK_THROWS_AS(run_spec_from_json(j), ConfigError);
  };
  bad("varient", "origin");
  bad("variant", "gsmote");
  bad("lambda", -1.0);
  bad("lambda", "small");
  bad("max_epochs", 0);
  bad("eta", 1.5);
  bad("mixup_b", 0.0);
  bad("mixup_b", 1.5);
  bad("mixup_threshold", 2.0);
  bad("imbalance_ratio", 0.0);
  bad("seeds", json::array());
  bad("head_activation", "tanh");
  bad("aggregation", "max");
  bad("oversample_mode", "double");
  CHECK_THROWS_AS(run_spec_from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(load_run_spec("/nonexistent/config.json"), ConfigError);
  TempDir dir;
  dir.write("broken.json", "{ \"variant\": ");
  CHECK_THROWS_AS(load_run_spec(dir.path / "broken.json"), ConfigError);
}

TEST_CASE("overrides") {
  json j = tiny_config();
  apply_override(j, "lambda", "0.5");
  CHECK(j["lambda"] == 0.5);
  apply_override(j, "variant", "origin");
  CHECK(j["variant"] == "origin");
  apply_override(j, "seeds", "[4,5]");
  CHECK(run_spec_from_json(j).seeds == std::vector<std::uint64_t>{4, 5});
  CHECK_THROWS_AS(apply_override(j, "no_such_key", "1"), ConfigError);
}

TEST_CASE("summary statistics") {
  const MetricSummary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(summarize({0.7}).std == 0.0);
}

TEST_CASE("dataset loading") {
  RunSpec spec = run_spec_from_json(tiny_config());
  const AttributedGraph g = load_dataset(spec);
  CHECK(g.n == 60);
  CHECK(g.m == 3);
  spec.dataset.source = "missing_dir";
  spec.base_dir = "/nonexistent";
  CHECK_THROWS_AS(load_dataset(spec), DatasetError);

  TempDir dir;
  save_graph(g, dir.path / "data");
  spec.dataset.source = "data";
  spec.base_dir = dir.path;
  const AttributedGraph back = load_dataset(spec);
  CHECK(back.features == g.features);
  CHECK(back.labels == g.labels);
}

TEST_CASE("run outputs are deterministic") {
  const RunSpec spec = run_spec_from_json(tiny_config());
  const AttributedGraph g = load_dataset(spec);
  TempDir a;
  TempDir b;
  const RunManifest ma = run_experiment(spec, g);
  write_run(ma, a.path, false);
  write_run(run_experiment(spec, g), b.path, false);
  const std::string csv = slurp(a.path / "metrics.csv");
  CHECK(csv == slurp(b.path / "metrics.csv"));
  CHECK(slurp(a.path / "history_seed1.csv") == slurp(b.path / "history_seed1.csv"));
  CHECK(csv.rfind("variant,seed,acc,macro_auc,macro_f,seconds\n", 0) == 0);
  CHECK(csv.find("gsmote_T,0,") != std::string::npos);
  CHECK(csv.find(",0.000\n") != std::string::npos);
  REQUIRE(ma.outcomes.size() == 2);
  CHECK(ma.outcomes[0].seed == 0);
  CHECK(ma.outcomes[1].seed == 1);
  const json manifest = json::parse(slurp(a.path / "manifest.json"));
  CHECK(manifest.contains("config"));
  CHECK(manifest["config"]["variant"] == "gsmote_T");
  CHECK_FALSE(std::filesystem::exists(a.path / "metrics.csv.tmp"));
}

TEST_CASE("manifest aggregates match a recomputation from per-seed entries") {
  json j = tiny_config();
  j["seeds"] = {0, 1, 2};
  const RunSpec spec = run_spec_from_json(j);
  const RunManifest m = run_experiment(spec, load_dataset(spec));
  const json doc = manifest_to_json(m);
  for (const char* metric : {"acc", "macro_auc", "macro_f"}) {
    CAPTURE(metric);
    std::vector<double> values;
    for (const auto& seed : doc["per_seed"]) values.push_back(seed["test"][metric].get<double>());
    REQUIRE(values.size() == 3);
    double mean = 0.0;
    for (double v : values) mean += v / 3.0;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean) / 3.0;
    CHECK(doc["aggregate"][metric]["mean"].get<double>() == doctest::Approx(mean).epsilon(1e-14));
    CHECK(doc["aggregate"][metric]["std"].get<double>() == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  }
}

TEST_CASE("seed results do not depend on the thread count") {
  const RunSpec spec = run_spec_from_json(tiny_config());
  const AttributedGraph g = load_dataset(spec);
  ::setenv("GSMOTE_THREADS", "1", 1);
  const std::string one = metrics_csv(run_experiment(spec, g), false);
  ::setenv("GSMOTE_THREADS", "4", 1);
  const std::string four = metrics_csv(run_experiment(spec, g), false);
  ::unsetenv("GSMOTE_THREADS");
  CHECK(one == four);
}

TEST_CASE("sweep") {
  TempDir dir;
  const auto out = sweep(tiny_config(), {}, "lambda", {"0", "0.001"}, dir.path);
  CHECK(out.size() == 2);
  CHECK(std::filesystem::exists(dir.path / "lambda=0" / "metrics.csv"));
  CHECK(std::filesystem::exists(dir.path / "lambda=0.001" / "manifest.json"));
  const std::string summary = slurp(dir.path / "sweep_summary.csv");
  CHECK(summary.rfind("param,value,acc_mean,acc_std,macro_auc_mean,macro_auc_std,macro_f_mean,macro_f_std\n", 0) == 0);
  CHECK(summary.find("lambda,0.001,") != std::string::npos);
  CHECK_THROWS_AS(sweep(tiny_config(), {}, "lamda", {"0"}, dir.path), ConfigError);
  CHECK_THROWS_AS(sweep(tiny_config(), {}, "lambda", {}, dir.path), ConfigError);
  CHECK_THROWS_AS(sweep(tiny_config(), {}, "lambda", {"-1"}, dir.path), ConfigError);
}

TEST_CASE("sweeping a generator key regenerates the graph") {
  TempDir dir;
  const auto out = sweep(tiny_config(), {}, "synthetic_separation", {"0.0", "3.0"}, dir.path);
  CHECK(out[0].macro_auc.mean != out[1].macro_auc.mean);
}

TEST_CASE("cora conversion") {
  TempDir dir;
  dir.write("cora.content",
            "31 1 0 1 Theory\n"
            "7 0 1 0 Neural_Networks\n"
            "99 1 1 0 Theory\n"
            "5 0 0 1 Case_Based\n");
  dir.write("cora.cites", "31 7\n7 31\n99 5\n31 31\n404 7\n");
  const CoraConversion r = convert_cora(dir.path, dir.path / "out");
  CHECK(r.nodes == 4);
  CHECK(r.features == 3);
  CHECK(r.classes == 3);
  CHECK(r.class_names == std::vector<std::string>{"Case_Based", "Neural_Networks", "Theory"});
  CHECK(r.citation_lines == 5);
  CHECK(r.unknown_endpoints == 1);
  const AttributedGraph g = load_graph(dir.path / "out");
  CHECK(g.labels == std::vector<int>{2, 1, 2, 0});
  CHECK(g.undirected_edge_count() == 2);
  CHECK(g.adjacency->coeff(0, 1) == 1.0);
  CHECK(g.adjacency->coeff(2, 3) == 1.0);
  CHECK(g.features(0, 0) == 1.0);

  dir.write("cora.content", "1 0 x Theory\n");
  CHECK_THROWS_AS(convert_cora(dir.path, dir.path / "bad"), DatasetError);
  CHECK_THROWS_AS(convert_cora(dir.path / "missing", dir.path / "bad"), DatasetError);
}

TEST_CASE("command-line exit codes") {
  TempDir dir;
  dir.write("ok.json", tiny_config().dump());
  json unknown = tiny_config();
  unknown["bogus"] = 1;
  dir.write("unknown.json", unknown.dump());
  json missing = tiny_config();
  missing["dataset"] = "no_such_dataset";
  dir.write("missing.json", missing.dump());
  const std::string d = dir.path.string();
  CHECK(run_cli("run --config " + d + "/ok.json --out " + d + "/run") == 0);
  CHECK(std::filesystem::exists(dir.path / "run" / "metrics.csv"));
  CHECK(run_cli("run --config " + d + "/ok.json --seeds 3 --out " + d + "/run3") == 0);
  CHECK(std::filesystem::exists(dir.path / "run3" / "history_seed3.csv"));
  CHECK(run_cli("run --config " + d + "/unknown.json --out " + d + "/x") == 2);
  CHECK(run_cli("run --config " + d + "/absent.json --out " + d + "/x") == 2);
  CHECK(run_cli("run --config " + d + "/missing.json --out " + d + "/x") == 3);
  CHECK(run_cli("sweep --config " + d + "/ok.json --param nope --values 1 --out " + d + "/x") == 2);
  CHECK(run_cli("sweep --config " + d + "/ok.json --param eta --values 0.3,0.7 --out " + d + "/sw") == 0);
  CHECK(std::filesystem::exists(dir.path / "sw" / "eta=0.7" / "metrics.csv"));
  CHECK(run_cli("prepare-cora --src " + d + "/nothing --out " + d + "/c") == 3);
  CHECK(run_cli("frobnicate") != 0);
}

}
