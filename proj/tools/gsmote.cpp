#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsmote/config.hpp"
#include "gsmote/runner.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kDatasetError = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_summary(const gsmote::RunManifest& m) {
  std::cout << "acc " << m.accuracy.mean << " +- " << m.accuracy.std << "  macro_auc " << m.macro_auc.mean
            << " +- " << m.macro_auc.std << "  macro_f " << m.macro_f.mean << " +- " << m.macro_f.std << "  ("
            << m.wall_clock_seconds << " s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imbalanced node classification with embedding-space over-sampling"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seeds_arg;
  std::string out_dir = "runs/latest";
  auto* run = app.add_subcommand("run", "Train and evaluate one configuration over its seeds");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--seeds", seeds_arg, "Comma-separated seeds, overriding the config");
  run->add_option("--out", out_dir, "Output directory");

  std::string param;
  std::string values_arg;
  auto* sweep = app.add_subcommand("sweep", "Run a configuration once per value of one parameter");
  sweep->add_option("--config", config_path, "JSON config file")->required();
  sweep->add_option("--param", param, "Config key to vary")->required();
  sweep->add_option("--values", values_arg, "Comma-separated values")->required();
  sweep->add_option("--seeds", seeds_arg, "Comma-separated seeds, overriding the config");
  sweep->add_option("--out", out_dir, "Output directory");

  std::string src_dir;
  std::string cora_out;
  auto* prepare = app.add_subcommand("prepare-cora", "Convert cora.content/cora.cites to the dataset format");
  prepare->add_option("--src", src_dir, "Directory holding cora.content and cora.cites")->required();
  prepare->add_option("--out", cora_out, "Output dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      const auto r = gsmote::convert_cora(src_dir, cora_out);
      std::cout << "nodes " << r.nodes << ", features " << r.features << ", classes " << r.classes
                << ", citation lines " << r.citation_lines << ", unknown endpoints " << r.unknown_endpoints
                << "\n";
      return 0;
    }

    nlohmann::json config;
    std::filesystem::path base_dir;
    try {
      config = gsmote::load_config_json(config_path);
      base_dir = std::filesystem::path(config_path).parent_path();
      if (!seeds_arg.empty()) {
        nlohmann::json seeds = nlohmann::json::array();
        for (const auto& s : split_list(seeds_arg)) seeds.push_back(std::stoull(s));
        config["seeds"] = seeds;
      }
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    }

    if (*run) {
      gsmote::RunSpec spec;
      try {
        spec = gsmote::run_spec_from_json(config, base_dir);
      } catch (const gsmote::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
      }
      const gsmote::AttributedGraph graph = gsmote::load_dataset(spec);
      const gsmote::RunManifest m = gsmote::run_experiment(spec, graph);
      gsmote::write_run(m, out_dir, spec.record_timing);
      print_summary(m);
      return 0;
    }

    const auto values = split_list(values_arg);
    const auto manifests = gsmote::sweep(config, base_dir, param, values, out_dir);
    for (std::size_t i = 0; i < manifests.size(); ++i) {
      std::cout << param << "=" << values[i] << ": ";
      print_summary(manifests[i]);
    }
    return 0;
  } catch (const gsmote::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const gsmote::DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kDatasetError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
