#include "specseg/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "specseg/checkpoint.hpp"
#include "specseg/cli/formats.hpp"
#include "specseg/fft.hpp"
#include "specseg/metrics.hpp"
#include "specseg/random.hpp"

namespace specseg::cli {

using nlohmann::json;

namespace {

std::string index_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string());
  }
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

json kv_json(const KeyValueConfig& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv.entries()) j[k] = v;
  return j;
}

/// One manifest per run; only wall_clock_seconds varies between identical runs.
class RunManifest {
 public:
  explicit RunManifest(std::string command)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write(const fs::path& path) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json j;
    j["command"] = command_;
    j["config"] = config;
    j["seed"] = seed;
    j["toolkit_version"] = kToolkitVersion;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_clock_seconds"] = seconds;
    auto out = open_text(path);
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
};

KeyValueConfig load_optional(const fs::path& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

struct Split {
  std::vector<SceneSample> train;
  std::vector<SceneSample> val;
};

Split split_dataset(Dataset data, const fs::path& val_dir, double val_fraction) {
  Split s;
  if (!val_dir.empty()) {
    s.train = std::move(data.samples);
    s.val = load_dataset(val_dir).samples;
    return s;
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val fraction must lie in [0, 1)");
  }
  const auto n = data.samples.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(n)));
  if (n_val >= n) throw ConfigError("dataset too small for the requested validation split");
  s.train.assign(data.samples.begin(), data.samples.end() - static_cast<std::ptrdiff_t>(n_val));
  s.val.assign(data.samples.end() - static_cast<std::ptrdiff_t>(n_val), data.samples.end());
  return s;
}

json class_json(const ClassMetrics& m) {
  return {{"class", m.class_index},         {"dsc", m.dsc},
          {"iou", m.iou},                   {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},   {"accuracy", m.accuracy},
          {"hd95", m.hd95},                 {"spectral_corr", m.spectral_corr}};
}

std::string_view noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::bernoulli:
      return "bernoulli";
    case NoiseKind::none:
      break;
  }
  return "none";
}

NetParams load_network(const fs::path& checkpoint, const fs::path& config, int num_classes) {
  const auto kv = load_optional(config);
  const NetSpec spec = net_spec_from(kv, num_classes);
  return load_checkpoint(checkpoint, spec);
}

}  // namespace

void save_dataset(const fs::path& dir, const Dataset& dataset) {
  ensure_dir(dir / "images");
  ensure_dir(dir / "masks");
  auto kv = to_key_values(dataset.config);
  kv.set("count", std::to_string(dataset.samples.size()));
  kv.set("start_index", std::to_string(dataset.start_index));
  auto cfg_out = open_text(dir / "dataset.cfg");
  kv.write(cfg_out);
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    save_sgf(dir / "images" / (index_name(i) + ".sgf"), Channels{s.image});
    save_pgm_mask(dir / "masks" / (index_name(i) + ".pgm"), s.mask);
  }
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory " + dir.string() + " not found");
  const auto kv = KeyValueConfig::load(dir / "dataset.cfg");
  Dataset d;
  d.config = scene_config_from(kv);
  d.start_index = kv.get_u64("start_index", 0);
  const auto count = kv.get_u64("count", 0);
  d.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSample s;
    auto channels = load_sgf(dir / "images" / (index_name(i) + ".sgf"));
    if (channels.size() != 1) throw FormatError("dataset images must have one channel");
    s.image = std::move(channels.front());
    s.mask = load_pgm_mask(dir / "masks" / (index_name(i) + ".pgm"));
    if (!s.mask.same_shape(s.image)) throw FormatError("image and mask sizes differ");
    if (s.mask.num_classes() != d.config.num_classes) {
      // PGM maxval only bounds the labels present; widen to the dataset's class count.
      s.mask = LabelMask(s.mask.height(), s.mask.width(), d.config.num_classes,
                         std::vector<std::uint8_t>(s.mask.labels().begin(), s.mask.labels().end()));
    }
    s.domain_tag = d.config.domain;
    s.seed = derive_seed(d.config.seed, d.start_index + i);
    d.samples.push_back(std::move(s));
  }
  return d;
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "none") return NoiseKind::none;
  if (text == "gaussian") return NoiseKind::gaussian;
  if (text == "bernoulli") return NoiseKind::bernoulli;
  throw ConfigError("unknown noise kind '" + text + "'");
}

Grid apply_noise(const Grid& image, NoiseKind kind, double level, std::uint64_t seed,
                 std::uint64_t index) {
  switch (kind) {
    case NoiseKind::gaussian:
      return add_gaussian_noise(image, level, derive_seed(seed, index));
    case NoiseKind::bernoulli:
      return add_bernoulli_noise(image, level, derive_seed(seed, index));
    case NoiseKind::none:
      break;
  }
  return image;
}

void cmd_synth(const SynthOptions& opts, std::ostream& log) {
  RunManifest manifest("synth");
  SceneConfig cfg = scene_config_from(load_optional(opts.config));
  if (opts.ood) cfg = domain_shift(cfg);
  ensure_dir(opts.out_dir);
  Dataset d;
  d.config = cfg;
  d.start_index = opts.start_index;
  for (std::size_t i = 0; i < opts.count; ++i) {
    d.samples.push_back(generate_scene(cfg, opts.start_index + i));
  }
  save_dataset(opts.out_dir, d);

  auto kv = to_key_values(cfg);
  manifest.config = kv_json(kv);
  manifest.config["count"] = opts.count;
  manifest.config["start_index"] = opts.start_index;
  manifest.config["ood"] = opts.ood;
  manifest.seed = cfg.seed;
  if (!opts.config.empty()) manifest.inputs.push_back(opts.config.string());
  manifest.outputs = {opts.out_dir.string()};
  manifest.write(opts.out_dir / "manifest.json");
  log << "wrote " << opts.count << " scenes to " << opts.out_dir.string() << '\n';
}

void cmd_train(const TrainOptions& opts, std::ostream& log) {
  RunManifest manifest("train");
  const auto kv = load_optional(opts.config);
  TrainConfig cfg = train_config_from(kv);
  if (opts.epochs) cfg.epochs = *opts.epochs;
  if (opts.lambda) cfg.loss.lambda = *opts.lambda;
  if (opts.seed) cfg.seed = *opts.seed;
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  Dataset data = load_dataset(opts.data);
  if (data.samples.empty()) throw ConfigError("dataset " + opts.data.string() + " is empty");
  const NetSpec net = net_spec_from(kv, data.config.num_classes);
  const Split split = split_dataset(std::move(data), opts.val_data, opts.val_fraction);

  ensure_dir(opts.out_dir);
  auto csv = open_text(opts.out_dir / "train_log.csv");
  csv << "epoch,spatial_loss,spectral_loss,total_loss,val_dsc\n";
  const auto result = train(split.train, split.val, net, cfg, [&](const EpochLog& e) {
    csv << e.epoch << ',' << format_g6(e.spatial_loss) << ',' << format_g6(e.spectral_loss) << ','
        << format_g6(e.total_loss) << ',' << format_g6(e.val_dsc) << '\n';
    log << "epoch " << e.epoch << " loss " << format_g6(e.total_loss) << " val_dsc "
        << format_g6(e.val_dsc) << '\n';
  });
  csv.close();
  save_checkpoint(opts.out_dir / "checkpoint.ssck", result.params);

  manifest.config = kv_json(to_key_values(cfg, net));
  manifest.config["val_fraction"] = opts.val_fraction;
  manifest.config["best_epoch"] = result.best_epoch;
  manifest.seed = cfg.seed;
  manifest.inputs = {opts.data.string()};
  if (!opts.val_data.empty()) manifest.inputs.push_back(opts.val_data.string());
  if (!opts.config.empty()) manifest.inputs.push_back(opts.config.string());
  manifest.outputs = {(opts.out_dir / "checkpoint.ssck").string(),
                      (opts.out_dir / "train_log.csv").string()};
  manifest.write(opts.out_dir / "manifest.json");
}

void cmd_eval(const EvalOptions& opts, std::ostream& log) {
  RunManifest manifest("eval");
  const Dataset data = load_dataset(opts.data);
  const NetParams params = load_network(opts.checkpoint, opts.config, data.config.num_classes);
  if (opts.noise != NoiseKind::none && !(opts.noise_level >= 0.0)) {
    throw ConfigError("noise level must be non-negative");
  }

  std::vector<Channels> probs;
  std::vector<LabelMask> truths;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    const Grid image = apply_noise(s.image, opts.noise, opts.noise_level, opts.noise_seed, i);
    probs.push_back(predict(params, image));
    truths.push_back(s.mask);
  }
  const FftPlan plan(data.config.height, data.config.width);
  const MetricTable table = evaluate_predictions(probs, truths, plan, opts.bins);

  ensure_dir(opts.out_dir);
  auto csv = open_text(opts.out_dir / "metrics.csv");
  csv << "sample,class,dsc,iou,sensitivity,specificity,accuracy,hd95,spectral_corr,ece,mce\n";
  for (const auto& sm : table.samples) {
    for (const auto& m : sm.classes) {
      csv << sm.index << ',' << m.class_index << ',' << format_g6(m.dsc) << ',' << format_g6(m.iou)
          << ',' << format_g6(m.sensitivity) << ',' << format_g6(m.specificity) << ','
          << format_g6(m.accuracy) << ',' << format_g6(m.hd95) << ','
          << format_g6(m.spectral_corr) << ',' << format_g6(sm.ece) << ',' << format_g6(sm.mce)
          << '\n';
    }
  }
  csv.close();

  json summary;
  summary["num_samples"] = table.samples.size();
  summary["mean_dsc"] = table.mean_dsc;
  summary["mean_iou"] = table.mean_iou;
  summary["mean_hd95"] = table.mean_hd95;
  summary["mean_spectral_corr"] = table.mean_spectral_corr;
  summary["ece"] = table.ece;
  summary["mce"] = table.mce;
  summary["per_class"] = json::array();
  for (const auto& m : table.mean_per_class) summary["per_class"].push_back(class_json(m));
  summary["noise"] = {{"kind", noise_name(opts.noise)},
                      {"level", opts.noise == NoiseKind::none ? 0.0 : opts.noise_level},
                      {"seed", opts.noise_seed}};
  auto js = open_text(opts.out_dir / "summary.json");
  js << summary.dump(2) << '\n';
  js.close();

  manifest.config = {{"noise", noise_name(opts.noise)},
                     {"noise_level", opts.noise_level},
                     {"noise_seed", opts.noise_seed},
                     {"bins", opts.bins},
                     {"network", params.spec.describe()}};
  manifest.seed = opts.noise_seed;
  manifest.inputs = {opts.checkpoint.string(), opts.data.string()};
  if (!opts.config.empty()) manifest.inputs.push_back(opts.config.string());
  manifest.outputs = {(opts.out_dir / "metrics.csv").string(),
                      (opts.out_dir / "summary.json").string()};
  manifest.write(opts.out_dir / "manifest.json");
  log << "mean DSC " << format_g6(table.mean_dsc) << " HD95 " << format_g6(table.mean_hd95)
      << " ECE " << format_g6(table.ece) << '\n';
}

void cmd_sweep(const SweepOptions& opts, std::ostream& log) {
  RunManifest manifest("sweep");
  if (opts.lambdas.empty()) throw ConfigError("sweep needs at least one lambda");
  for (const double l : opts.lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambdas must be finite and >= 0");
  }
  const auto kv = load_optional(opts.config);
  TrainConfig base = train_config_from(kv);
  if (opts.epochs) base.epochs = *opts.epochs;
  Dataset data = load_dataset(opts.data);
  if (data.samples.empty()) throw ConfigError("dataset " + opts.data.string() + " is empty");
  const NetSpec net = net_spec_from(kv, data.config.num_classes);
  const FftPlan plan(data.config.height, data.config.width);
  const Split split = split_dataset(std::move(data), opts.val_data, opts.val_fraction);
  const Dataset test = load_dataset(opts.test_data);

  ensure_dir(opts.out_dir);
  auto csv = open_text(opts.out_dir / "sweep.csv");
  csv << "lambda,val_dsc,val_hd95,test_dsc,test_iou\n";
  for (const double lambda : opts.lambdas) {
    TrainConfig cfg = base;
    cfg.loss.lambda = lambda;
    const auto result = train(split.train, split.val, net, cfg);
    const auto val = evaluate(result.params, split.val, plan);
    const auto tst = evaluate(result.params, test.samples, plan);
    csv << format_g6(lambda) << ',' << format_g6(val.mean_dsc) << ',' << format_g6(val.mean_hd95)
        << ',' << format_g6(tst.mean_dsc) << ',' << format_g6(tst.mean_iou) << '\n';
    log << "lambda " << format_g6(lambda) << " test DSC " << format_g6(tst.mean_dsc) << '\n';
  }
  csv.close();

  manifest.config = kv_json(to_key_values(base, net));
  json lambdas = json::array();
  for (const double l : opts.lambdas) lambdas.push_back(l);
  manifest.config["lambdas"] = lambdas;
  manifest.seed = base.seed;
  manifest.inputs = {opts.data.string(), opts.test_data.string()};
  manifest.outputs = {(opts.out_dir / "sweep.csv").string()};
  manifest.write(opts.out_dir / "manifest.json");
}

namespace {

GridD indicator(const LabelMask& mask, std::optional<int> class_index) {
  if (class_index) return one_hot<double>(mask, *class_index);
  GridD out(mask.height(), mask.width());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] != 0 ? 1.0 : 0.0;
  return out;
}

}  // namespace

std::optional<double> cmd_spectrum(const SpectrumOptions& opts, std::ostream& log) {
  RunManifest manifest("spectrum");
  std::optional<LabelMask> truth;
  std::optional<LabelMask> pred;
  if (!opts.mask.empty()) truth = load_pgm_mask(opts.mask);
  if (!opts.pred.empty()) pred = load_pgm_mask(opts.pred);
  if (!opts.checkpoint.empty() || !opts.image.empty()) {
    if (opts.checkpoint.empty() || opts.image.empty()) {
      throw ConfigError("--checkpoint and --image must be given together");
    }
    if (pred) throw ConfigError("give either --pred or --checkpoint/--image, not both");
    const auto channels = load_sgf(opts.image);
    if (channels.size() != 1) throw FormatError("input image must have one channel");
    const int classes = truth ? truth->num_classes()
                              : static_cast<int>(load_optional(opts.config).get_int("num_classes", 3));
    auto kv = load_optional(opts.config);
    const NetSpec spec = net_spec_from(kv, classes);
    const NetParams params = load_checkpoint(opts.checkpoint, spec);
    pred = argmax(predict(params, channels.front()));
  }
  if (!truth && !pred) throw ConfigError("spectrum needs --mask, --pred, or --checkpoint with --image");
  if (truth && pred && !truth->same_shape(*pred)) throw ConfigError("mask sizes differ");

  const LabelMask& shown = pred ? *pred : *truth;
  const FftPlan plan(shown.height(), shown.width());
  const Grid spectrum = log_magnitude_spectrum(fft2(plan, indicator(shown, opts.class_index)));
  if (opts.out.has_parent_path()) fs::create_directories(opts.out.parent_path());
  save_pgm_image(opts.out, spectrum);

  std::optional<double> corr;
  if (truth && pred) {
    const GridD t = indicator(*truth, opts.class_index);
    const GridD p = indicator(*pred, opts.class_index);
    corr = squared_norm(t) == 0.0 && squared_norm(p) == 0.0 ? 1.0 : scc(p, t, plan);
    char buf[64];
    std::snprintf(buf, sizeof buf, "Corr. = %.4f", *corr);
    log << buf << '\n';
  }

  manifest.config = {{"class", opts.class_index ? json(*opts.class_index) : json("foreground")}};
  for (const auto* p : {&opts.mask, &opts.pred, &opts.checkpoint, &opts.image, &opts.config}) {
    if (!p->empty()) manifest.inputs.push_back(p->string());
  }
  manifest.outputs = {opts.out.string()};
  if (corr) manifest.config["corr"] = *corr;
  fs::path manifest_path = opts.out;
  manifest_path += ".manifest.json";
  manifest.write(manifest_path);
  return corr;
}

void cmd_calib(const CalibOptions& opts, std::ostream& log) {
  RunManifest manifest("calib");
  const Dataset data = load_dataset(opts.data);
  const NetParams params = load_network(opts.checkpoint, opts.config, data.config.num_classes);
  CalibrationAccumulator acc(opts.bins);
  for (const auto& s : data.samples) acc.add(predict(params, s.image), s.mask);
  const auto report = acc.report();

  ensure_dir(opts.out_dir);
  auto csv = open_text(opts.out_dir / "reliability.csv");
  csv << "bin,lower,upper,confidence_mean,accuracy,count\n";
  for (std::size_t b = 0; b < report.per_bin.size(); ++b) {
    const auto& bin = report.per_bin[b];
    const double lo = static_cast<double>(b) / report.num_bins;
    const double hi = static_cast<double>(b + 1) / report.num_bins;
    csv << b << ',' << format_g6(lo) << ',' << format_g6(hi) << ','
        << format_g6(bin.confidence_mean) << ',' << format_g6(bin.accuracy) << ',' << bin.count
        << '\n';
  }
  csv.close();
  json j = {{"ece", report.ece}, {"mce", report.mce}, {"num_bins", report.num_bins}};
  auto js = open_text(opts.out_dir / "calibration.json");
  js << j.dump(2) << '\n';
  js.close();

  manifest.config = {{"bins", opts.bins}, {"network", params.spec.describe()}};
  manifest.inputs = {opts.checkpoint.string(), opts.data.string()};
  manifest.outputs = {(opts.out_dir / "reliability.csv").string(),
                      (opts.out_dir / "calibration.json").string()};
  manifest.write(opts.out_dir / "manifest.json");
  log << "ECE " << format_g6(report.ece) << " MCE " << format_g6(report.mce) << '\n';
}

namespace {

std::vector<double> parse_lambda_list(const std::string& text) {
  KeyValueConfig kv;
  kv.set("lambdas", text);
  return kv.get_doubles("lambdas", {});
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral/spatial segmentation loss and evaluation toolkit", "specseg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic scene dataset");
  c_synth->add_option("--config", synth.config, "Scene config (key = value)");
  c_synth->add_option("--count", synth.count, "Number of scenes")->required();
  c_synth->add_option("--start-index", synth.start_index, "Index of the first scene");
  c_synth->add_flag("--ood", synth.ood, "Apply the domain shift");
  c_synth->add_option("--out", synth.out_dir, "Output directory")->required();

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Train the segmenter");
  c_train->add_option("--data", tr.data, "Training dataset directory")->required();
  c_train->add_option("--val-data", tr.val_data, "Validation dataset directory");
  c_train->add_option("--val-fraction", tr.val_fraction, "Tail fraction used for validation");
  c_train->add_option("--config", tr.config, "Training config (key = value)");
  c_train->add_option("--epochs", tr.epochs, "Override epochs");
  c_train->add_option("--lambda", tr.lambda, "Override spectral weight");
  c_train->add_option("--seed", tr.seed, "Override seed");
  c_train->add_option("--out", tr.out_dir, "Output directory")->required();

  EvalOptions ev;
  std::string noise = "none";
  std::optional<double> noise_level;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--data", ev.data)->required();
  c_eval->add_option("--config", ev.config, "Config with network keys");
  c_eval->add_option("--noise", noise, "none | gaussian | bernoulli");
  c_eval->add_option("--noise-level", noise_level, "Gaussian sigma or Bernoulli rate (default 0.01)");
  c_eval->add_option("--noise-seed", ev.noise_seed);
  c_eval->add_option("--bins", ev.bins, "Calibration bins");
  c_eval->add_option("--out", ev.out_dir)->required();

  SweepOptions sw;
  std::optional<std::string> lambdas;
  auto* c_sweep = app.add_subcommand("sweep", "Train once per lambda and tabulate");
  c_sweep->add_option("--data", sw.data)->required();
  c_sweep->add_option("--val-data", sw.val_data);
  c_sweep->add_option("--val-fraction", sw.val_fraction);
  c_sweep->add_option("--test-data", sw.test_data)->required();
  c_sweep->add_option("--config", sw.config);
  c_sweep->add_option("--lambdas", lambdas, "Comma-separated list (default 0.1,0.2,0.3,0.5,0.9)");
  c_sweep->add_option("--epochs", sw.epochs);
  c_sweep->add_option("--out", sw.out_dir)->required();

  SpectrumOptions sp;
  auto* c_spec = app.add_subcommand("spectrum", "Render a mask spectrum");
  c_spec->add_option("--mask", sp.mask, "Ground-truth mask (PGM)");
  c_spec->add_option("--pred", sp.pred, "Predicted mask (PGM)");
  c_spec->add_option("--checkpoint", sp.checkpoint);
  c_spec->add_option("--image", sp.image, "Input image (SGF1) for --checkpoint");
  c_spec->add_option("--config", sp.config);
  c_spec->add_option("--class", sp.class_index, "Class index (default: foreground)");
  c_spec->add_option("--out", sp.out, "Output PGM")->required();

  CalibOptions ca;
  auto* c_calib = app.add_subcommand("calib", "Reliability table and ECE/MCE");
  c_calib->add_option("--checkpoint", ca.checkpoint)->required();
  c_calib->add_option("--data", ca.data)->required();
  c_calib->add_option("--config", ca.config);
  c_calib->add_option("--bins", ca.bins);
  c_calib->add_option("--out", ca.out_dir)->required();

  std::vector<std::string> argv_store{"specseg"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolkitVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*c_synth) {
      cmd_synth(synth, out);
    } else if (*c_train) {
      cmd_train(tr, out);
    } else if (*c_eval) {
      ev.noise = parse_noise_kind(noise);
      if (noise_level) ev.noise_level = *noise_level;
      cmd_eval(ev, out);
    } else if (*c_sweep) {
      if (lambdas) sw.lambdas = parse_lambda_list(*lambdas);
      cmd_sweep(sw, out);
    } else if (*c_spec) {
      (void)cmd_spectrum(sp, out);
    } else if (*c_calib) {
      cmd_calib(ca, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace specseg::cli
