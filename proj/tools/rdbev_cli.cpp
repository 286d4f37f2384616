// rdbev: generate synthetic RD/BEV datasets, run baselines and ablations, and
// evaluate predictions.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 I/O or file-format
// error, 4 validation error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rdbev/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct GenerateOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> frames;
  std::optional<std::uint64_t> seed;
  std::optional<double> resolution;
  std::optional<double> snr_db;
  std::optional<double> split_ratio;
  bool store_points = false;
};

int cmd_generate(const GenerateOptions& o) {
  rdbev::GeneratorConfig cfg =
      o.config.empty() ? rdbev::GeneratorConfig{} : rdbev::GeneratorConfig::load(o.config);
  if (o.frames) cfg.frames = *o.frames;
  if (o.seed) cfg.seed = *o.seed;
  if (o.resolution) cfg.resolution = *o.resolution;
  if (o.snr_db) cfg.snr_db = *o.snr_db;
  if (o.split_ratio) cfg.split_ratio = *o.split_ratio;
  if (o.store_points) cfg.store_points = true;
  cfg.validate();
  std::cout << "config_digest " << cfg.digest() << "\n";
  const auto grid = cfg.grid();
  const auto m = rdbev::generate_dataset(cfg, o.out);
  std::cout << "grid " << grid.rows() << "x" << grid.cols() << " @ " << grid.resolution
            << " m\n"
            << "frames " << m.entries.size() << " (train " << m.split(rdbev::Split::Train).size()
            << ", val " << m.split(rdbev::Split::Val).size() << ")\n"
            << "wrote " << o.out << "\n";
  return 0;
}

std::string dataset_digest(const std::string& dir) {
  const auto m = rdbev::read_manifest(dir);
  auto it = m.meta.find("config_digest");
  return it == m.meta.end() ? std::string("unknown") : it->second;
}

int cmd_baseline(const std::string& dataset, const std::string& method_name,
                 const std::string& chirp_name, const std::string& out) {
  const auto method = rdbev::parse_baseline_method(method_name);
  if (chirp_name != "A" && chirp_name != "B") throw rdbev::ConfigError("--chirp must be A or B");
  const auto chirp = chirp_name == "A" ? rdbev::Chirp::A : rdbev::Chirp::B;
  std::cout << "config_digest "
            << rdbev::fnv1a_hex("baseline " + method_name + " chirp=" + chirp_name +
                                " dataset=" + dataset_digest(dataset))
            << "\n";
  const auto m = rdbev::run_baseline(dataset, method, out, rdbev::worker_count(), chirp);
  std::cout << "method " << method_name << "\n";
  if (auto it = m.meta.find("pos_frac"); it != m.meta.end())
    std::cout << "train pos_frac " << it->second << "\n";
  std::cout << "predictions " << m.entries.size() << " -> " << out << "\n";
  return 0;
}

int cmd_ablate(const std::string& dataset, const std::string& transform_name,
               const std::string& out) {
  const auto t = rdbev::parse_ablation(transform_name);
  std::cout << "config_digest "
            << rdbev::fnv1a_hex("ablate " + transform_name + " dataset=" + dataset_digest(dataset))
            << "\n";
  const auto m = rdbev::run_ablation(dataset, t, out);
  std::cout << "transform " << transform_name << " applied to " << m.entries.size()
            << " frames -> " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& dataset, const std::string& predictions,
                 const std::string& out) {
  std::cout << "config_digest "
            << rdbev::fnv1a_hex("evaluate dataset=" + dataset_digest(dataset) +
                                " predictions=" + predictions)
            << "\n";
  const auto report = rdbev::run_evaluation(dataset, predictions);
  rdbev::write_report(report, out);
  std::cout << rdbev::format_report(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic pre-beamforming radar RD / BEV occupancy toolkit"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Simulate a dataset of RD frames and BEV labels");
  generate->add_option("--config", gen.config, "key = value config file")->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out, "Output dataset directory")->required();
  generate->add_option("--frames", gen.frames, "Number of frames");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--resolution", gen.resolution, "BEV cell size in meters")
      ->check(CLI::IsMember({0.5, 0.4, 0.35}));
  generate->add_option("--snr-db", gen.snr_db, "Reference-target SNR in dB");
  generate->add_option("--split-ratio", gen.split_ratio, "Train fraction")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_flag("--store-points", gen.store_points, "Keep LiDAR point clouds in frame files");

  std::string dataset, out, method, chirp = "A", transform, predictions;
  auto* baseline = app.add_subcommand("baseline", "Write baseline predictions for validation frames");
  baseline->add_option("--dataset", dataset, "Dataset directory")->required();
  baseline->add_option("--method", method, "prior | range_energy | beamform")->required();
  baseline->add_option("--chirp", chirp, "Chirp used by the beamform oracle (A or B)");
  baseline->add_option("--out", out, "Output predictions directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Apply an RD ablation transform to every frame");
  ablate->add_option("--dataset", dataset, "Dataset directory")->required();
  ablate->add_option("--transform", transform,
                     "a_only | b_only | collapse_doppler | collapse_range")
      ->required();
  ablate->add_option("--out", out, "Output dataset directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate predictions on the validation split");
  evaluate->add_option("--dataset", dataset, "Dataset directory")->required();
  evaluate->add_option("--predictions", predictions, "Predictions directory")->required();
  evaluate->add_option("--out", out, "Report output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*baseline) return cmd_baseline(dataset, method, chirp, out);
    if (*ablate) return cmd_ablate(dataset, transform, out);
    if (*evaluate) return cmd_evaluate(dataset, predictions, out);
  } catch (const rdbev::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rdbev::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rdbev::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitConfig;
}
