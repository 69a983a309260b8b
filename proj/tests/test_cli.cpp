#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "audiomorph/cli/cli.hpp"
#include "audiomorph/data/manifest.hpp"
#include "audiomorph/dsp/spectrogram_io.hpp"
#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/model/checkpoint.hpp"
#include "audiomorph/train/embeddings.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/temp_dir.hpp"

using namespace audiomorph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "audiomorph");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kTinyModel = {"--hidden", "6", "--attention-size", "5", "--conv-channels", "3",
                                             "--decoder-layers", "1", "--batch-size", "8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Small corpus shared by the pipeline cases: 3 styles x 6 pitches, one held out.
fs::path corpus(const testing::TempDir& dir) {
  const auto d = dir / "data";
  const auto r = run({"synth-data", "--styles", "3", "--pitches", "6", "--holdout", "1", "--out", d.string()});
  REQUIRE(r.code == cli::kExitOk);
  return d / "manifest.jsonl";
}

}  // namespace

TEST_CASE("edit distance") {
  CHECK(cli::edit_distance("kitten", "sitting") == 3);
  CHECK(cli::edit_distance("", "abc") == 3);
  CHECK(cli::edit_distance("--epochs", "--epochs") == 0);
  CHECK(cli::edit_distance("--epoch", "--epochs") == 1);
}

TEST_CASE("help output matches the golden files") {
  const bool update = std::getenv("AUDIOMORPH_UPDATE_GOLDEN") != nullptr;
  const std::vector<std::string> subs = {"",      "synth-data", "features", "train",      "transform",
                                         "eval",  "ablate",     "embed",    "griffin-lim"};
  for (const auto& s : subs) {
    CAPTURE(s);
    const auto r = s.empty() ? run({"--help"}) : run({s, "--help"});
    CHECK(r.code == cli::kExitOk);
    const fs::path golden = fs::path(AUDIOMORPH_GOLDEN_DIR) / ((s.empty() ? "audiomorph" : s) + ".txt");
    if (update) std::ofstream(golden, std::ios::binary) << r.out;
    CHECK(r.out == slurp(golden));
  }
}

TEST_CASE("usage errors exit 1 with a single-line message") {
  auto r = run({});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.rfind("error: usage:", 0) == 0);

  r = run({"trian"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("did you mean 'train'?") != std::string::npos);

  r = run({"synth-data", "--out", "x", "--pitchs", "4"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("did you mean '--pitches'?") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  r = run({"synth-data", "--styles", "3"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--out") != std::string::npos);

  testing::TempDir dir;
  const auto m = corpus(dir);
  r = run({"train", "--manifest", m.string(), "--out", (dir / "r").string(), "--attention", "dot"});
  CHECK(r.code == cli::kExitUsage);
  r = run({"eval", "--ckpt", (dir / "missing.ckpt").string(), "--manifest", m.string()});
  CHECK(r.code == cli::kExitUsage);
}

TEST_CASE("synth-data writes the documented corpus deterministically") {
  testing::TempDir dir;
  const auto a = dir / "a";
  const auto r = run({"synth-data", "--styles", "4", "--pitches", "24", "--holdout", "4", "--seed", "7", "--out",
                      a.string()});
  REQUIRE(r.code == cli::kExitOk);
  std::size_t wavs = 0;
  for (const auto& e : fs::directory_iterator(a)) wavs += e.path().extension() == ".wav";
  CHECK(wavs == 96);
  const auto m = data::read_manifest(a / "manifest.jsonl");
  CHECK(m.entries.size() == 96);
  CHECK(nlohmann::json::parse(r.out)["test"] == 16);

  const auto b = dir / "b";
  REQUIRE(run({"synth-data", "--styles", "4", "--pitches", "24", "--holdout", "4", "--seed", "7", "--out",
               b.string()})
              .code == 0);
  const auto c = dir / "c";
  REQUIRE(run({"synth-data", "--styles", "4", "--pitches", "24", "--holdout", "4", "--seed", "8", "--out",
               c.string()})
              .code == 0);
  for (const auto& e : m.entries) {
    CHECK(slurp(a / e.audio_path) == slurp(b / e.audio_path));
  }
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK(slurp(a / "style0_midi48.wav") != slurp(c / "style0_midi48.wav"));
}

TEST_CASE("config file values apply and flags override them") {
  testing::TempDir dir;
  const auto cfg = dir / "run.toml";
  std::ofstream(cfg) << "[synth-data]\nstyles=3\npitches=6\nholdout=2\nseed=11\n";
  const auto out = dir / "d";
  const auto r = run({"synth-data", "--config", cfg.string(), "--pitches", "5", "--out", out.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(data::read_manifest(out / "manifest.jsonl").entries.size() == 15);

  const auto resolved = slurp(out / "resolved_config.toml");
  CHECK(resolved.find("pitches=5") != std::string::npos);
  CHECK(resolved.find("seed=11") != std::string::npos);
  CHECK(resolved.find("holdout=2") != std::string::npos);

  // The resolved file reproduces the run.
  const auto again = dir / "again";
  REQUIRE(run({"--config", (out / "resolved_config.toml").string(), "synth-data", "--out", again.string()}).code == 0);
  CHECK(slurp(again / "manifest.jsonl") == slurp(out / "manifest.jsonl"));
  CHECK(slurp(again / "style2_midi52.wav") == slurp(out / "style2_midi52.wav"));

  CHECK(run({"synth-data", "--config", (dir / "absent.toml").string(), "--out", out.string()}).code ==
        cli::kExitUsage);
}

TEST_CASE("train, eval, transform, embed and griffin-lim pipeline") {
  testing::TempDir dir;
  const auto m = corpus(dir).string();
  const auto run_a = dir / "run_a";
  const auto run_b = dir / "run_b";
  const auto train = with({"train", "--manifest", m, "--epochs", "2", "--seed", "3"}, kTinyModel);
  REQUIRE(run(with(train, {"--out", run_a.string()})).code == cli::kExitOk);
  REQUIRE(run(with(train, {"--out", run_b.string()})).code == cli::kExitOk);
  CHECK(slurp(run_a / "model.ckpt") == slurp(run_b / "model.ckpt"));
  CHECK(slurp(run_a / "loss.csv") == slurp(run_b / "loss.csv"));
  CHECK(slurp(run_a / "resolved_config.toml").find("seed=3") != std::string::npos);
  const auto ckpt = (run_a / "model.ckpt").string();

  const auto ev = run({"eval", "--ckpt", ckpt, "--manifest", m});
  REQUIRE(ev.code == cli::kExitOk);
  const auto report = nlohmann::json::parse(ev.out);
  CHECK(report["split"] == "test");
  CHECK(report["examples"].size() == 6);
  CHECK(report["mean_mcd"]["per_frame"].get<double>() > 0);

  const auto wav = dir / "b.wav";
  const auto tr = run({"transform", "--in", (dir / "data" / "style0_midi51.wav").string(), "--source-style", "0",
                       "--target-style", "2", "--ckpt", ckpt, "--out", wav.string()});
  REQUIRE(tr.code == cli::kExitOk);
  CHECK(fs::exists(wav));
  CHECK(fs::exists(dir / "b.config.toml"));
  const auto att = dsp::read_amspec(dir / "b.attention.amspec");
  CHECK(att.scale == dsp::Scale::attention);
  for (std::size_t i = 0; i < att.frames; ++i) {
    double sum = 0;
    for (float v : att.frame(i)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  }
  const auto mel = dsp::read_amspec(dir / "b.mel.amspec");
  CHECK(mel.frames == att.frames);
  CHECK(dsp::read_wav(wav).samples.size() > 0);

  const auto gl = run({"griffin-lim", "--in", (dir / "b.mel.amspec").string(), "--out", (dir / "g.wav").string(),
                       "--iters", "5"});
  CHECK(gl.code == cli::kExitOk);
  CHECK(fs::exists(dir / "g.wav"));

  const auto tsv = dir / "e.tsv";
  REQUIRE(run({"embed", "--ckpt", ckpt, "--manifest", m, "--out", tsv.string()}).code == cli::kExitOk);
  const auto rows = train::read_embeddings_tsv(tsv);
  CHECK(rows.size() == 18);
  CHECK(rows.front().values.size() == 6);

  const auto feats = dir / "feats";
  REQUIRE(run({"features", "--manifest", m, "--out", feats.string()}).code == cli::kExitOk);
  const auto fm = data::read_manifest(feats / "manifest.jsonl");
  CHECK(fm.entries.size() == 18);
  CHECK(fm.entries.front().audio_path.empty());
  const auto ev2 = run({"eval", "--ckpt", ckpt, "--manifest", (feats / "manifest.jsonl").string()});
  REQUIRE(ev2.code == cli::kExitOk);
  CHECK(nlohmann::json::parse(ev2.out)["mean_mcd"] == report["mean_mcd"]);
}

TEST_CASE("runtime failures exit 2") {
  testing::TempDir dir;
  const auto m = corpus(dir).string();
  const auto run_dir = dir / "r";
  REQUIRE(run(with({"train", "--manifest", m, "--epochs", "1", "--num-styles", "4", "--out", run_dir.string()},
                   kTinyModel))
              .code == 0);
  const auto ckpt = (run_dir / "model.ckpt").string();
  const auto input = (dir / "data" / "style0_midi50.wav").string();

  auto r = run({"transform", "--in", input, "--source-style", "0", "--target-style", "3", "--ckpt", ckpt, "--out",
                (dir / "o.wav").string()});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.rfind("error: unseen-style:", 0) == 0);

  std::ofstream(dir / "broken.ckpt") << "not a checkpoint";
  r = run({"transform", "--in", input, "--source-style", "0", "--target-style", "1", "--ckpt",
           (dir / "broken.ckpt").string(), "--out", (dir / "o.wav").string()});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.rfind("error: format:", 0) == 0);

  r = run(with({"train", "--manifest", m, "--context-ms", "30", "--out", (dir / "bad").string()}, kTinyModel));
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.rfind("error: invalid-input:", 0) == 0);
}

TEST_CASE("ablate writes one row per context") {
  testing::TempDir dir;
  const auto m = corpus(dir).string();
  const auto out = dir / "abl";
  const auto r = run(with({"ablate", "--manifest", m, "--epochs", "1", "--contexts", "12.5,50", "--out", out.string()},
                          kTinyModel));
  REQUIRE(r.code == cli::kExitOk);
  const auto csv = slurp(out / "ablation.csv");
  CHECK(csv == r.out);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\n12.5,1,") != std::string::npos);
  CHECK(csv.find("\n50,4,") != std::string::npos);
  CHECK(fs::exists(out / "context_12.5" / "model.ckpt"));
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = AUDIOMORPH_CLI_PATH;
  auto status = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str())); };
  CHECK(status(bin + " --help") == 0);
  CHECK(status(bin + " train") == 1);
  testing::TempDir dir;
  std::ofstream(dir / "junk.amspec") << "junk";
  CHECK(status(bin + " griffin-lim --in " + (dir / "junk.amspec").string() + " --out " + (dir / "x.wav").string()) ==
        2);
}
