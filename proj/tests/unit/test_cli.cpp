#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "specseg/cli/commands.hpp"
#include "specseg/cli/formats.hpp"
#include "specseg/fft.hpp"
#include "specseg/checkpoint.hpp"

using namespace specseg;
using namespace specseg::cli;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("specseg_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int invoke(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o;
  std::ostringstream e;
  const int rc = run(args, o, e);
  if (out) *out = o.str() + e.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::vector<std::string> csv_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

KeyValueConfig kv_text(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in);
}

const char* kSmallScenes = "height = 32\nwidth = 32\n";
const char* kTinyTrain = "epochs = 1\nwidths = 4,6,8\n";

}  // namespace

TEST_CASE("file formats round trip") {
  TempDir tmp("formats");
  LabelMask m(3, 5, 3, std::vector<std::uint8_t>{0, 1, 2, 0, 1, 2, 2, 1, 0, 0, 0, 1, 1, 2, 2});
  save_pgm_mask(tmp.path / "m.pgm", m);
  const auto bytes = slurp(tmp.path / "m.pgm");
  CHECK(bytes.substr(0, 2) == "P5");
  const auto back = load_pgm_mask(tmp.path / "m.pgm");
  CHECK(std::equal(back.labels().begin(), back.labels().end(), m.labels().begin()));

  Channels ch{Grid(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6}), Grid(2, 3, 0.25F)};
  save_sgf(tmp.path / "x.sgf", ch);
  const auto raw = slurp(tmp.path / "x.sgf");
  CHECK(raw.size() == 4 + 12 + 4 * 12);
  CHECK(raw.substr(0, 4) == "SGF1");
  const auto got = load_sgf(tmp.path / "x.sgf");
  REQUIRE(got.size() == 2);
  CHECK(got[0] == ch[0]);
  CHECK(got[1] == ch[1]);

  write_text(tmp.path / "bad.sgf", "SGF1xx");
  CHECK_THROWS_AS((void)load_sgf(tmp.path / "bad.sgf"), FormatError);
  write_text(tmp.path / "bad.pgm", "P2\n2 2\n1\n0 1 1 0\n");
  CHECK_THROWS_AS((void)load_pgm_mask(tmp.path / "bad.pgm"), FormatError);
}

TEST_CASE("key value configs") {
  const auto kv = kv_text("# comment\nheight = 48\n\nlambda=0.3\nwidths = 2, 4,8\n");
  CHECK(kv.get_int("height", 0) == 48);
  CHECK(kv.get_double("lambda", 0.0) == 0.3);
  CHECK(kv.get_doubles("widths", {}) == std::vector<double>{2, 4, 8});
  CHECK_THROWS_AS((void)kv_text("just words\n"), ConfigError);
  CHECK_THROWS_AS((void)scene_config_from(kv_text("colour = red\n")), ConfigError);
  CHECK_THROWS_AS((void)train_config_from(kv_text("epochs = many\n")), ConfigError);
}

TEST_CASE("synth writes a reproducible dataset") {
  TempDir tmp("synth");
  write_text(tmp.path / "s.cfg", kSmallScenes);
  const auto cfg = (tmp.path / "s.cfg").string();
  REQUIRE(invoke({"synth", "--config", cfg, "--count", "10", "--out", (tmp.path / "a").string()}) == 0);
  REQUIRE(invoke({"synth", "--config", cfg, "--count", "10", "--out", (tmp.path / "b").string()}) == 0);
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(tmp.path / "a" / "images")) {
    ++images;
    const auto name = e.path().filename();
    CHECK(slurp(e.path()) == slurp(tmp.path / "b" / "images" / name));
    auto mask = name;
    mask.replace_extension(".pgm");
    CHECK(slurp(tmp.path / "a" / "masks" / mask) == slurp(tmp.path / "b" / "masks" / mask));
  }
  CHECK(images == 10);
  CHECK(fs::exists(tmp.path / "a" / "manifest.json"));
  CHECK(slurp(tmp.path / "a" / "dataset.cfg") == slurp(tmp.path / "b" / "dataset.cfg"));

  const auto d = load_dataset(tmp.path / "a");
  CHECK(d.samples.size() == 10);
  const auto direct = generate_scene(scene_config_from(kv_text(kSmallScenes)), 4);
  CHECK(d.samples[4].image == direct.image);

  REQUIRE(invoke({"synth", "--count", "0", "--out", (tmp.path / "empty").string()}) == 0);
  CHECK(load_dataset(tmp.path / "empty").samples.empty());
  CHECK(fs::exists(tmp.path / "empty" / "manifest.json"));
}

TEST_CASE("usage and input errors exit with 2") {
  TempDir tmp("errors");
  CHECK(invoke({}) == 2);
  CHECK(invoke({"frobnicate"}) == 2);
  CHECK(invoke({"synth", "--count", "3"}) == 2);
  CHECK(invoke({"train", "--data", (tmp.path / "missing").string(), "--out", (tmp.path / "o").string()}) == 2);
  write_text(tmp.path / "bad.cfg", "height = 8\n");
  CHECK(invoke({"synth", "--config", (tmp.path / "bad.cfg").string(), "--count", "1", "--out",
             (tmp.path / "x").string()}) == 2);
  write_text(tmp.path / "file", "");
  CHECK(invoke({"synth", "--count", "1", "--out", (tmp.path / "file" / "sub").string()}) == 2);
  write_text(tmp.path / "junk.pgm", "not a pgm");
  CHECK(invoke({"spectrum", "--mask", (tmp.path / "junk.pgm").string(), "--out",
             (tmp.path / "s.pgm").string()}) == 2);
  std::string help;
  CHECK(invoke({"--help"}, &help) == 0);
  CHECK(help.find("sweep") != std::string::npos);
}

TEST_CASE("train, eval, calib and spectrum pipeline") {
  TempDir tmp("pipeline");
  write_text(tmp.path / "s.cfg", kSmallScenes);
  write_text(tmp.path / "t.cfg", kTinyTrain);
  const auto s = (tmp.path / "s.cfg").string();
  const auto t = (tmp.path / "t.cfg").string();
  const auto data = (tmp.path / "data").string();
  const auto test = (tmp.path / "test").string();
  REQUIRE(invoke({"synth", "--config", s, "--count", "12", "--out", data}) == 0);
  REQUIRE(invoke({"synth", "--config", s, "--count", "4", "--start-index", "9000", "--out", test}) == 0);

  const auto run_dir = tmp.path / "run";
  REQUIRE(invoke({"train", "--data", data, "--config", t, "--epochs", "2", "--out", run_dir.string()}) == 0);
  const auto log = csv_lines(run_dir / "train_log.csv");
  REQUIRE(log.size() == 3);
  CHECK(log[0] == "epoch,spatial_loss,spectral_loss,total_loss,val_dsc");
  CHECK(log[1].rfind("1,", 0) == 0);
  CHECK(log[2].rfind("2,", 0) == 0);
  const auto ckpt = (run_dir / "checkpoint.ssck").string();

  SUBCASE("eval without noise equals direct evaluation") {
    const auto out = tmp.path / "eval";
    REQUIRE(invoke({"eval", "--checkpoint", ckpt, "--data", test, "--config", t, "--out", out.string()}) == 0);
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    const auto ds = load_dataset(test);
    NetSpec spec;
    spec.widths = {4, 6, 8};
    const auto params = load_checkpoint(ckpt, spec);
    const auto direct = evaluate(params, ds.samples, FftPlan(32, 32));
    CHECK(summary["mean_dsc"].get<double>() == direct.mean_dsc);
    CHECK(summary["mean_hd95"].get<double>() == direct.mean_hd95);
    CHECK(summary["ece"].get<double>() == direct.ece);
    CHECK(csv_lines(out / "metrics.csv").size() == 1 + 4 * 2);

    const auto zero = tmp.path / "eval_zero";
    REQUIRE(invoke({"eval", "--checkpoint", ckpt, "--data", test, "--config", t, "--noise", "gaussian",
                 "--noise-level", "0", "--out", zero.string()}) == 0);
    CHECK(slurp(zero / "metrics.csv") == slurp(out / "metrics.csv"));

    const auto n1 = tmp.path / "noisy1";
    const auto n2 = tmp.path / "noisy2";
    for (const auto& dir : {n1, n2}) {
      REQUIRE(invoke({"eval", "--checkpoint", ckpt, "--data", test, "--config", t, "--noise", "bernoulli",
                   "--noise-seed", "7", "--out", dir.string()}) == 0);
    }
    CHECK(slurp(n1 / "metrics.csv") == slurp(n2 / "metrics.csv"));
    CHECK(slurp(n1 / "summary.json") == slurp(n2 / "summary.json"));

    // the default network spec does not match this checkpoint
    CHECK(invoke({"eval", "--checkpoint", ckpt, "--data", test, "--out", (tmp.path / "bad").string()}) == 2);
    CHECK(invoke({"eval", "--checkpoint", ckpt, "--data", test, "--config", t, "--noise", "pink", "--out",
               (tmp.path / "bad").string()}) == 2);
  }

  SUBCASE("calib") {
    const auto out = tmp.path / "calib";
    REQUIRE(invoke({"calib", "--checkpoint", ckpt, "--data", test, "--config", t, "--bins", "5", "--out",
                 out.string()}) == 0);
    CHECK(csv_lines(out / "reliability.csv").size() == 6);
    const auto j = nlohmann::json::parse(slurp(out / "calibration.json"));
    CHECK(j["ece"].get<double>() <= j["mce"].get<double>());
  }

  SUBCASE("spectrum") {
    const auto mask = (tmp.path / "data" / "masks" / "00000.pgm").string();
    std::string printed;
    REQUIRE(invoke({"spectrum", "--mask", mask, "--pred", mask, "--out", (tmp.path / "sp.pgm").string()},
                &printed) == 0);
    CHECK(printed.find("Corr. = 1.0000") != std::string::npos);
    REQUIRE(invoke({"spectrum", "--mask", mask, "--checkpoint", ckpt, "--image",
                 (tmp.path / "data" / "images" / "00000.sgf").string(), "--config", t, "--out",
                 (tmp.path / "sp2.pgm").string()}, &printed) == 0);
    CHECK(printed.find("Corr. = ") != std::string::npos);
    CHECK(fs::exists(tmp.path / "sp2.pgm.manifest.json"));
  }
}

TEST_CASE("spectrum images") {
  TempDir tmp("spectrum");
  save_pgm_mask(tmp.path / "zero.pgm", LabelMask(16, 16, 2));
  REQUIRE(invoke({"spectrum", "--mask", (tmp.path / "zero.pgm").string(), "--out",
               (tmp.path / "z.pgm").string()}) == 0);
  const auto z = slurp(tmp.path / "z.pgm");
  CHECK(z.substr(z.size() - 256).find_first_not_of('\0') == std::string::npos);

  LabelMask disk(16, 16, 2);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) {
      if ((r - 8.0) * (r - 8.0) + (c - 8.0) * (c - 8.0) <= 16.0) disk.set(r, c, 1);
    }
  }
  save_pgm_mask(tmp.path / "disk.pgm", disk);
  REQUIRE(invoke({"spectrum", "--mask", (tmp.path / "disk.pgm").string(), "--out",
               (tmp.path / "d.pgm").string()}) == 0);
  const auto d = slurp(tmp.path / "d.pgm");
  const auto pix = d.substr(d.size() - 256);
  std::size_t brightest = 0;
  for (std::size_t i = 0; i < pix.size(); ++i) {
    if (static_cast<unsigned char>(pix[i]) > static_cast<unsigned char>(pix[brightest])) brightest = i;
  }
  CHECK(brightest == 8 * 16 + 8);
}

TEST_CASE("sweep rows") {
  TempDir tmp("sweep");
  write_text(tmp.path / "s.cfg", kSmallScenes);
  write_text(tmp.path / "t.cfg", kTinyTrain);
  const auto s = (tmp.path / "s.cfg").string();
  const auto data = (tmp.path / "data").string();
  const auto test = (tmp.path / "test").string();
  REQUIRE(invoke({"synth", "--config", s, "--count", "10", "--out", data}) == 0);
  REQUIRE(invoke({"synth", "--config", s, "--count", "3", "--start-index", "5000", "--out", test}) == 0);
  const auto t = (tmp.path / "t.cfg").string();

  const auto dup = tmp.path / "dup";
  REQUIRE(invoke({"sweep", "--data", data, "--test-data", test, "--config", t, "--lambdas", "0.2,0.2", "--out",
               dup.string()}) == 0);
  const auto rows = csv_lines(dup / "sweep.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "lambda,val_dsc,val_hd95,test_dsc,test_iou");
  CHECK(rows[1] == rows[2]);

  const auto base = tmp.path / "base";
  REQUIRE(invoke({"sweep", "--data", data, "--test-data", test, "--config", t, "--lambdas", "0", "--out",
               base.string()}) == 0);
  CHECK(csv_lines(base / "sweep.csv").size() == 2);

  const auto def = tmp.path / "default";
  REQUIRE(invoke({"sweep", "--data", data, "--test-data", test, "--config", t, "--out", def.string()}) == 0);
  const auto all = csv_lines(def / "sweep.csv");
  REQUIRE(all.size() == 6);
  CHECK(all[1].rfind("0.1,", 0) == 0);
  CHECK(all[5].rfind("0.9,", 0) == 0);

  CHECK(invoke({"sweep", "--data", data, "--test-data", test, "--lambdas", "", "--out", def.string()}) == 2);
  CHECK(invoke({"sweep", "--data", data, "--test-data", test, "--lambdas", "0.2,-1", "--out", def.string()}) == 2);
}
