#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tdfb/errors.hpp"
#include "tdfb/filter_init.hpp"
#include "tdfb/formats.hpp"
#include "tdfb/frontend.hpp"
#include "tdfb/gradcheck_suite.hpp"
#include "tdfb/mel_reference.hpp"
#include "tdfb/signal_io.hpp"
#include "tdfb/train_toy.hpp"

namespace tdfb::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::map<std::string, Variant> kVariants{{"scattering", Variant::scattering},
                                               {"gammatone", Variant::gammatone}};
const std::map<std::string, InitScheme> kInits{
    {"gamm", InitScheme::gamm}, {"scatt", InitScheme::scatt}, {"rand", InitScheme::rand}};
const std::map<std::string, Lowpass> kLowpass{{"han-fixed", Lowpass::han_fixed},
                                              {"han-learnt", Lowpass::han_learnt},
                                              {"max-pool", Lowpass::max_pool}};
const std::map<std::string, AblationAxis> kAxes{{"instance-norm", AblationAxis::instance_norm},
                                                {"lowpass", AblationAxis::lowpass},
                                                {"init", AblationAxis::init},
                                                {"pre-emphasis", AblationAxis::pre_emphasis}};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

// Front-end flags shared by extract, train-toy and ablate.
template <typename T>
std::vector<std::string> keys(const std::map<std::string, T>& m) {
  std::vector<std::string> out;
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

struct FrontendFlags {
  std::string variant = "scattering";
  std::string init = "scatt";
  std::string lowpass = "han-fixed";
  bool pre_emphasis = false;
  bool no_instance_norm = false;
  double log_offset = 0.0;  // 0 = variant default

  void add_to(CLI::App& app, bool required) {
    auto* v = app.add_option("--variant", variant, "scattering | gammatone")
                  ->check(CLI::IsMember(keys(kVariants)));
    auto* i = app.add_option("--init", init, "gamm | scatt | rand")->check(CLI::IsMember(keys(kInits)));
    if (required) {
      v->required();
      i->required();
    }
    app.add_option("--lowpass", lowpass, "han-fixed | han-learnt | max-pool")
        ->check(CLI::IsMember(keys(kLowpass)));
    app.add_flag("--pre-emphasis", pre_emphasis, "prepend the learnable pre-emphasis layer");
    app.add_flag("--no-instance-norm", no_instance_norm, "drop the final instance normalization");
    app.add_option("--log-offset", log_offset, "log compression offset (default per variant)")
        ->check(CLI::PositiveNumber);
  }

  FrontendConfig config() const {
    const InitScheme i = kInits.at(init);
    const Lowpass l = kLowpass.at(lowpass);
    FrontendConfig c = kVariants.at(variant) == Variant::scattering
                           ? FrontendConfig::scattering(i, l)
                           : FrontendConfig::gammatone(i, l);
    c.use_pre_emphasis = pre_emphasis;
    c.use_instance_norm = !no_instance_norm;
    if (log_offset > 0.0) c.log_offset = log_offset;
    try {
      c.validate();
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct TrainFlags {
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t train_size = TrainConfig{}.train_size;
  std::size_t heldout_size = TrainConfig{}.heldout_size;
  double lr = TrainConfig{}.learning_rate;
  double momentum = TrainConfig{}.momentum;

  void add_to(CLI::App& app) {
    app.add_option("--epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
    app.add_option("--train-size", train_size, "training utterances")->check(CLI::PositiveNumber);
    app.add_option("--heldout-size", heldout_size, "held-out utterances")
        ->check(CLI::PositiveNumber);
    app.add_option("--lr", lr, "learning rate")->check(CLI::PositiveNumber);
    app.add_option("--momentum", momentum, "SGD momentum")->check(CLI::Range(0.0, 0.999));
  }

  TrainConfig config(const FrontendConfig& frontend, std::uint64_t seed) const {
    TrainConfig t;
    t.frontend = frontend;
    t.seed = seed;
    t.epochs = epochs;
    t.train_size = train_size;
    t.heldout_size = heldout_size;
    t.learning_rate = lr;
    t.momentum = momentum;
    return t;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learnable time-domain filterbanks: feature extraction, checks and toy training",
               "tdfb"};
  app.require_subcommand(1);

  // init-dump
  auto* init_cmd = app.add_subcommand("init-dump", "write initial filters as a TDFB dump");
  std::string init_kind;
  std::string init_out;
  bool init_csv = false;
  std::uint64_t init_seed = 0;
  std::size_t init_rows = 40;
  init_cmd->add_option("--kind", init_kind, "gamm | scatt | rand")
      ->required()
      ->check(CLI::IsMember({"gamm", "scatt", "rand"}));
  init_cmd->add_option("--out", init_out, "output TDFB path")->required();
  init_cmd->add_flag("--csv", init_csv, "also write <out>.csv");
  init_cmd->add_option("--seed", init_seed, "seed for rand filters");
  init_cmd->add_option("--rows", init_rows, "rows for rand filters (40 or 80)")
      ->check(CLI::IsMember({40, 80}));

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "compute front-end features of a WAV file");
  FrontendFlags extract_flags;
  extract_flags.add_to(*extract_cmd, true);
  std::string extract_in, extract_out, extract_filters;
  bool extract_csv = false;
  std::uint64_t extract_seed = 0;
  extract_cmd->add_option("--in", extract_in, "input WAV (mono PCM16, 16 kHz)")->required();
  extract_cmd->add_option("--out", extract_out, "output TDFT path")->required();
  extract_cmd->add_flag("--csv", extract_csv, "also write <out>.csv (frames as rows)");
  extract_cmd->add_option("--seed", extract_seed, "seed for rand init");
  extract_cmd->add_option("--filters", extract_filters, "TDFB dump replacing the initial filters");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare backward passes to finite differences");
  std::string grad_layer;
  bool grad_all = false;
  std::uint64_t grad_seed = 1;
  auto* layer_opt = grad_cmd->add_option("--layer", grad_layer, "single check to run");
  grad_cmd->add_flag("--all", grad_all, "run every check (default)")->excludes(layer_opt);
  grad_cmd->add_option("--seed", grad_seed, "seed for the random inputs");

  // compare-mel
  auto* mel_cmd = app.add_subcommand("compare-mel",
                                     "correlate the Gabor-initialized front-end with log-mel");
  std::string mel_in;
  std::string mel_init = "scatt";
  std::uint64_t mel_seed = 0;
  mel_cmd->add_option("--in", mel_in, "input WAV")->required();
  mel_cmd->add_option("--init", mel_init, "scatt | rand")->check(CLI::IsMember({"scatt", "rand"}));
  mel_cmd->add_option("--seed", mel_seed, "seed for rand init");

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "train a front-end on the toy task");
  FrontendFlags train_flags;
  train_flags.add_to(*train_cmd, false);
  TrainFlags train_opts;
  train_opts.add_to(*train_cmd);
  std::uint64_t train_seed = 1;
  std::string train_out, train_filters_out;
  train_cmd->add_option("--seed", train_seed, "run seed (data, init, shuffling)");
  train_cmd->add_option("--out", train_out, "CSV report path (default: stdout)");
  train_cmd->add_option("--save-filters", train_filters_out, "write trained filters (TDFB)");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "train matched pairs along one axis");
  FrontendFlags ablate_flags;
  ablate_flags.add_to(*ablate_cmd, false);
  TrainFlags ablate_opts;
  ablate_opts.add_to(*ablate_cmd);
  std::string axis_name;
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3};
  std::string ablate_dir;
  ablate_cmd->add_option("--axis", axis_name, "instance-norm | lowpass | init | pre-emphasis")
      ->required()
      ->check(CLI::IsMember(keys(kAxes)));
  ablate_cmd->add_option("--seeds", ablate_seeds, "run seeds (at least 3)")->delimiter(',');
  ablate_cmd->add_option("--out-dir", ablate_dir, "directory for CSV reports and summary")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*init_cmd) {
      const MelScaleGrid grid = mel_grid();
      Matrix filters;
      if (init_kind == "gamm") {
        filters = init_gammatone(grid).filters;
      } else if (init_kind == "scatt") {
        filters = init_gabor(grid).filters;
      } else {
        filters = init_random(init_rows, kConvWidth, init_seed).filters;
      }
      write_filter_dump(init_out, filters);
      if (init_csv) write_csv(init_out + ".csv", filters);
      out << "wrote " << filters.rows() << "x" << filters.cols() << " filters to " << init_out
          << "\n";
    } else if (*extract_cmd) {
      const FrontendConfig config = extract_flags.config();
      FilterParams params = make_filter_params(config, extract_seed);
      if (!extract_filters.empty()) {
        Matrix loaded = read_filter_dump(extract_filters);
        if (!loaded.same_shape(params.conv.value)) {
          throw UsageError("filters " + loaded.shape_string() + " do not fit " +
                           config.describe() + " " + params.conv.value.shape_string());
        }
        params.conv.value = std::move(loaded);
      }
      const Waveform wave = load_wav(extract_in);
      const FeatureMap features = frontend_forward(wave, params, config);
      write_feature_dump(extract_out, features.values);
      if (extract_csv) write_csv_transposed(extract_out + ".csv", features.values);
      out << "channels=" << features.channels() << " frames=" << features.frames() << "\n";
    } else if (*grad_cmd) {
      std::vector<GradCheckResult> results;
      if (!grad_layer.empty()) {
        try {
          results.push_back(run_gradcheck(grad_layer, grad_seed));
        } catch (const ContractViolation& e) {
          throw UsageError(e.what());
        }
      } else {
        results = run_all_gradchecks(grad_seed);
      }
      bool ok = true;
      for (const auto& r : results) {
        char line[160];
        std::snprintf(line, sizeof line, "%-40s max_rel_error=%.3e tol=%.0e %s\n", r.name.c_str(),
                      r.max_rel_error, r.tolerance, r.passed() ? "PASS" : "FAIL");
        out << line;
        ok = ok && r.passed();
      }
      return ok ? 0 : 1;
    } else if (*mel_cmd) {
      FrontendConfig config = FrontendConfig::scattering(
          mel_init == "rand" ? InitScheme::rand : InitScheme::scatt, Lowpass::han_fixed);
      const FilterParams params = make_filter_params(config, mel_seed);
      const Waveform wave = load_wav(mel_in);
      const auto corr = mel_channel_correlation(std::span(&wave, 1), params, config);
      double mean = 0.0;
      out << "channel,correlation\n";
      for (std::size_t c = 0; c < corr.size(); ++c) {
        out << c << "," << fmt(corr[c]) << "\n";
        mean += corr[c];
      }
      out << "mean=" << fmt(mean / static_cast<double>(corr.size())) << "\n";
    } else if (*train_cmd) {
      const TrainConfig tc = train_opts.config(train_flags.config(), train_seed);
      ToyModel model;
      const TrainReport report = train(tc, &model);
      if (train_out.empty()) {
        out << report_csv(report);
      } else {
        write_text(train_out, report_csv(report));
      }
      if (!train_filters_out.empty()) write_filter_dump(train_filters_out, model.frontend.conv.value);
      out << report_summary(report);
    } else if (*ablate_cmd) {
      if (ablate_seeds.size() < 3) throw UsageError("ablate needs at least 3 seeds");
      const TrainConfig base = ablate_opts.config(ablate_flags.config(), ablate_seeds.front());
      AblationResult result;
      try {
        result = ablation_run(kAxes.at(axis_name), base, ablate_seeds);
      } catch (const ContractViolation& e) {
        throw UsageError(e.what());
      }
      std::filesystem::create_directories(ablate_dir);
      for (std::size_t i = 0; i < ablate_seeds.size(); ++i) {
        const std::string seed = std::to_string(ablate_seeds[i]);
        write_text(std::filesystem::path(ablate_dir) / ("a_seed" + seed + ".csv"),
                   report_csv(result.a.reports[i]));
        write_text(std::filesystem::path(ablate_dir) / ("b_seed" + seed + ".csv"),
                   report_csv(result.b.reports[i]));
      }
      const std::string summary = ablation_summary(result);
      write_text(std::filesystem::path(ablate_dir) / "summary.txt", summary);
      out << summary;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tdfb::cli
