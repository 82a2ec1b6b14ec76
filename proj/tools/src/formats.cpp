#include "specseg/cli/formats.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace specseg::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw FormatError("PGM header truncated");
  return tok;
}

std::size_t pnm_number(std::istream& in) {
  const std::string tok = pnm_token(in);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw FormatError("bad PGM header field '" + tok + "'");
  }
  return v;
}

void write_pgm(std::ostream& out, std::size_t height, std::size_t width, int maxval,
               const std::vector<std::uint8_t>& bytes) {
  out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed to write PGM");
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFFU), static_cast<char>((v >> 8) & 0xFFU),
                              static_cast<char>((v >> 16) & 0xFFU),
                              static_cast<char>((v >> 24) & 0xFFU)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw FormatError("SGF1 data truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void write_pgm_mask(std::ostream& out, const LabelMask& mask) {
  std::vector<std::uint8_t> bytes(mask.labels().begin(), mask.labels().end());
  write_pgm(out, mask.height(), mask.width(), mask.num_classes() - 1, bytes);
}

LabelMask read_pgm_mask(std::istream& in) {
  if (pnm_token(in) != "P5") throw FormatError("not a binary PGM (P5) file");
  const std::size_t width = pnm_number(in);
  const std::size_t height = pnm_number(in);
  const std::size_t maxval = pnm_number(in);
  if (width == 0 || height == 0) throw FormatError("PGM dimensions must be positive");
  if (maxval < 1 || maxval > 255) throw FormatError("mask PGM maxval must be in [1, 255]");
  std::vector<std::uint8_t> bytes(width * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw FormatError("PGM pixel data truncated");
  try {
    return {height, width, static_cast<int>(maxval) + 1, std::move(bytes)};
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid mask PGM: ") + e.what());
  }
}

void save_pgm_mask(const std::filesystem::path& path, const LabelMask& mask) {
  auto out = open_out(path);
  write_pgm_mask(out, mask);
}

LabelMask load_pgm_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pgm_mask(in);
}

void save_pgm_image(const std::filesystem::path& path, const Grid& image) {
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(static_cast<double>(image[i]), 0.0, 1.0);
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  auto out = open_out(path);
  write_pgm(out, image.height(), image.width(), 255, bytes);
}

void write_sgf(std::ostream& out, const Channels& channels) {
  if (channels.empty()) throw ArgumentError("SGF1 needs at least one channel");
  for (const auto& ch : channels) require_same_shape(ch, channels.front(), "write_sgf");
  out.write("SGF1", 4);
  put_u32(out, static_cast<std::uint32_t>(channels.front().height()));
  put_u32(out, static_cast<std::uint32_t>(channels.front().width()));
  put_u32(out, static_cast<std::uint32_t>(channels.size()));
  for (const auto& ch : channels) {
    for (const float v : ch.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw FormatError("failed to write SGF1");
}

Channels read_sgf(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SGF1", 4) != 0) throw FormatError("not an SGF1 file");
  const std::uint32_t height = get_u32(in);
  const std::uint32_t width = get_u32(in);
  const std::uint32_t channels = get_u32(in);
  if (height == 0 || width == 0 || channels == 0) throw FormatError("SGF1 dimensions must be positive");
  Channels out;
  for (std::uint32_t c = 0; c < channels; ++c) {
    Grid g(height, width);
    for (float& v : g.values()) {
      v = std::bit_cast<float>(get_u32(in));
      if (!std::isfinite(v)) throw FormatError("SGF1 contains a non-finite value");
    }
    out.push_back(std::move(g));
  }
  return out;
}

void save_sgf(const std::filesystem::path& path, const Channels& channels) {
  auto out = open_out(path);
  write_sgf(out, channels);
}

Channels load_sgf(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_sgf(in);
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.set(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in);
}

void KeyValueConfig::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

bool KeyValueConfig::has(const std::string& key) const { return entries_.contains(key); }

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

namespace {

template <class N>
N parse_number(const std::string& key, const std::string& text) {
  N v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  // from_chars for double is unavailable on older toolchains.
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  double v = 0.0;
  is >> v;
  if (is.fail() || !is.eof() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return v;
}

}  // namespace

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(key, entries_.at(key)) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  return has(key) ? parse_number<long long>(key, entries_.at(key)) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_number<std::uint64_t>(key, entries_.at(key)) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = entries_.at(key);
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  std::stringstream ss(entries_.at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void KeyValueConfig::write(std::ostream& out) const {
  for (const auto& [key, value] : entries_) out << key << " = " << value << '\n';
}

std::string format_exact(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_exact(values[i]);
  }
  return out;
}

const std::vector<std::string> kSceneKeys = {
    "height", "width", "num_classes", "size_jitter", "shape_jitter", "intensity_means",
    "intensity_noise_sigma", "texture_contrast", "size_scale", "dependency_rule", "domain", "seed"};

const std::vector<std::string> kTrainKeys = {
    "batch_size", "learning_rate", "momentum", "weight_decay", "epochs", "seed", "lambda",
    "dice_epsilon", "bce_clamp", "augment", "widths", "depth", "binary_head"};

}  // namespace

SceneConfig scene_config_from(const KeyValueConfig& kv) {
  std::vector<std::string> known = kSceneKeys;
  known.emplace_back("count");
  known.emplace_back("start_index");
  kv.require_known(known);
  SceneConfig cfg;
  cfg.height = static_cast<std::size_t>(kv.get_int("height", static_cast<long long>(cfg.height)));
  cfg.width = static_cast<std::size_t>(kv.get_int("width", static_cast<long long>(cfg.width)));
  cfg.num_classes = static_cast<int>(kv.get_int("num_classes", cfg.num_classes));
  cfg.size_jitter = kv.get_double("size_jitter", cfg.size_jitter);
  cfg.shape_jitter = kv.get_double("shape_jitter", cfg.shape_jitter);
  if (kv.has("intensity_means")) {
    cfg.intensity_means = kv.get_doubles("intensity_means", {});
  } else if (cfg.num_classes != 3) {
    cfg.intensity_means.clear();
    for (int c = 0; c < cfg.num_classes; ++c) {
      cfg.intensity_means.push_back(0.2 + 0.6 * c / static_cast<double>(cfg.num_classes - 1));
    }
  }
  cfg.intensity_noise_sigma = kv.get_double("intensity_noise_sigma", cfg.intensity_noise_sigma);
  cfg.texture_contrast = kv.get_double("texture_contrast", cfg.texture_contrast);
  cfg.size_scale = kv.get_double("size_scale", cfg.size_scale);
  cfg.dependency_rule = parse_dependency_rule(kv.get("dependency_rule", std::string(to_string(cfg.dependency_rule))));
  cfg.domain = parse_domain_tag(kv.get("domain", "iid"));
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

KeyValueConfig to_key_values(const SceneConfig& cfg) {
  KeyValueConfig kv;
  kv.set("height", std::to_string(cfg.height));
  kv.set("width", std::to_string(cfg.width));
  kv.set("num_classes", std::to_string(cfg.num_classes));
  kv.set("size_jitter", format_exact(cfg.size_jitter));
  kv.set("shape_jitter", format_exact(cfg.shape_jitter));
  kv.set("intensity_means", join(cfg.intensity_means));
  kv.set("intensity_noise_sigma", format_exact(cfg.intensity_noise_sigma));
  kv.set("texture_contrast", format_exact(cfg.texture_contrast));
  kv.set("size_scale", format_exact(cfg.size_scale));
  kv.set("dependency_rule", std::string(to_string(cfg.dependency_rule)));
  kv.set("domain", std::string(to_string(cfg.domain)));
  kv.set("seed", std::to_string(cfg.seed));
  return kv;
}

TrainConfig train_config_from(const KeyValueConfig& kv) {
  kv.require_known(kTrainKeys);
  TrainConfig cfg;
  const long long batch = kv.get_int("batch_size", static_cast<long long>(cfg.batch_size));
  if (batch < 1) throw ConfigError("batch_size must be positive");
  cfg.batch_size = static_cast<std::size_t>(batch);
  cfg.learning_rate = kv.get_double("learning_rate", cfg.learning_rate);
  cfg.momentum = kv.get_double("momentum", cfg.momentum);
  cfg.weight_decay = kv.get_double("weight_decay", cfg.weight_decay);
  cfg.epochs = static_cast<int>(kv.get_int("epochs", cfg.epochs));
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.loss.lambda = kv.get_double("lambda", cfg.loss.lambda);
  cfg.loss.dice_epsilon = kv.get_double("dice_epsilon", cfg.loss.dice_epsilon);
  cfg.loss.bce_clamp = kv.get_double("bce_clamp", cfg.loss.bce_clamp);
  cfg.augment = kv.get_bool("augment", cfg.augment);
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

NetSpec net_spec_from(const KeyValueConfig& kv, int num_classes) {
  NetSpec spec;
  spec.num_classes = num_classes;
  if (kv.has("widths")) {
    spec.widths.clear();
    for (const double w : kv.get_doubles("widths", {})) {
      if (w != std::floor(w) || w < 1) throw ConfigError("widths must be positive integers");
      spec.widths.push_back(static_cast<int>(w));
    }
  }
  spec.depth = static_cast<int>(kv.get_int("depth", spec.depth));
  spec.binary_head = kv.get_bool("binary_head", spec.binary_head);
  spec.validate();
  return spec;
}

KeyValueConfig to_key_values(const TrainConfig& cfg, const NetSpec& net) {
  KeyValueConfig kv;
  kv.set("batch_size", std::to_string(cfg.batch_size));
  kv.set("learning_rate", format_exact(cfg.learning_rate));
  kv.set("momentum", format_exact(cfg.momentum));
  kv.set("weight_decay", format_exact(cfg.weight_decay));
  kv.set("epochs", std::to_string(cfg.epochs));
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("lambda", format_exact(cfg.loss.lambda));
  kv.set("dice_epsilon", format_exact(cfg.loss.dice_epsilon));
  kv.set("bce_clamp", format_exact(cfg.loss.bce_clamp));
  kv.set("augment", cfg.augment ? "true" : "false");
  std::string widths;
  for (std::size_t i = 0; i < net.widths.size(); ++i) {
    widths += (i ? "," : "") + std::to_string(net.widths[i]);
  }
  kv.set("widths", widths);
  kv.set("depth", std::to_string(net.depth));
  kv.set("binary_head", net.binary_head ? "true" : "false");
  return kv;
}

}  // namespace specseg::cli
