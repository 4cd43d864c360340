#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "slrobust/benchgen/benchgen.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/core/log.hpp"
#include "slrobust/dae/checkpoint.hpp"
#include "slrobust/media/png_io.hpp"
#include "slrobust/media/randomize.hpp"
#include "slrobust/metrics/wer.hpp"
#include "slrobust/toytrain/experiment.hpp"
#include "slrobust/toytrain/gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slrobust;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw IoError(what + " '" + p.string() + "' not found");
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError(what + " '" + p.string() + "' not found");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void add_seed(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "Master seed")
      ->envname("SLROBUST_SEED")
      ->default_val(kDefaultSeed);
}

// ---------------------------------------------------------------------------

struct GenBenchmarkArgs {
  fs::path manifest, scenes, out;
  std::uint64_t seed = kDefaultSeed;
  int splits = 3;
  int first_split = 0;
  unsigned jobs = 1;
};

int cmd_gen_benchmark(const GenBenchmarkArgs& a) {
  require_file(a.manifest, "CSLR manifest");
  require_exists(a.scenes, "scene catalog");
  const auto videos = benchgen::read_cslr_manifest(a.manifest);
  const auto catalog = benchgen::load_catalog(a.scenes);
  benchgen::BenchmarkConfig cfg;
  cfg.master_seed = a.seed;
  cfg.n_splits = a.splits;
  cfg.first_split_id = a.first_split;
  cfg.jobs = a.jobs;
  cfg.validate();
  fs::create_directories(a.out);
  const auto splits = benchgen::generate_benchmark(videos, catalog, cfg, a.out);
  std::size_t n = 0;
  for (const auto& s : splits) n += s.size();
  log_info("wrote " + std::to_string(splits.size()) + " split(s), " + std::to_string(n) +
           " video(s) under " + a.out.string());
  return 0;
}

// ---------------------------------------------------------------------------

struct GenTrainPoolArgs {
  fs::path scenes, out;
  std::uint64_t seed = kDefaultSeed;
  std::size_t k = 10;
};

/// Copies K images per scene class into `out/images/` and writes
/// `out/pool.jsonl` in the catalog index format.
int cmd_gen_train_pool(const GenTrainPoolArgs& a) {
  require_exists(a.scenes, "scene catalog");
  const auto catalog = benchgen::load_catalog(a.scenes);
  Rng rng(derive_seed(a.seed, "pool"));
  const auto pool = benchgen::select_training_pool(catalog, a.k, rng);
  fs::create_directories(a.out / "images");
  std::ostringstream index;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& e = pool[i];
    const fs::path rel = fs::path("images") / (std::to_string(i) + ".png");
    media::save_frame(a.out / rel, e.load());
    index << json{{"class", e.class_label}, {"id", e.id}, {"path", rel.generic_string()}}.dump()
          << '\n';
  }
  write_text(a.out / "pool.jsonl", index.str());
  log_info("wrote " + std::to_string(pool.size()) + " pool image(s) to " + a.out.string());
  return 0;
}

// ---------------------------------------------------------------------------

struct BrPreviewArgs {
  fs::path manifest, scenes, out;
  std::uint64_t seed = kDefaultSeed;
  std::size_t k = 10;
  std::size_t count = 8;
  double lambda_min = 0.1;
  double lambda_max = 0.6;
};

/// Renders `count` background-randomized frames. Frame i comes from video
/// i mod n (videos in id order), at a seeded frame index.
int cmd_br_preview(const BrPreviewArgs& a) {
  require_file(a.manifest, "CSLR manifest");
  require_exists(a.scenes, "scene catalog");
  media::AugmentConfig aug;
  aug.lambda_min = a.lambda_min;
  aug.lambda_max = a.lambda_max;
  aug.validate();
  auto videos = benchgen::read_cslr_manifest(a.manifest);
  if (videos.empty()) throw ValidationError("CSLR manifest is empty");
  std::sort(videos.begin(), videos.end(),
            [](const auto& x, const auto& y) { return x.video_id < y.video_id; });
  std::vector<std::vector<fs::path>> frames;
  for (const auto& v : videos) {
    frames.push_back(media::list_frames(v.frames_dir));
    if (frames.back().empty()) throw ValidationError("video '" + v.video_id + "' has no frames");
  }
  const auto catalog = benchgen::load_catalog(a.scenes);
  Rng pool_rng(derive_seed(a.seed, "pool"));
  std::vector<media::Frame> pool;
  std::vector<std::string> pool_ids;
  for (const auto& e : benchgen::select_training_pool(catalog, a.k, pool_rng)) {
    pool.push_back(e.load());
    pool_ids.push_back(e.id);
  }

  fs::create_directories(a.out);
  std::ostringstream index;
  for (std::size_t i = 0; i < a.count; ++i) {
    Rng rng(derive_seed(derive_seed(a.seed, "preview"), i));
    const std::size_t v = i % videos.size();
    const std::size_t f = rng.index(frames[v].size());
    media::Video clip;
    clip.id = videos[v].video_id;
    clip.frames.push_back(media::load_frame(frames[v][f]));
    const auto r = media::background_randomize(clip, pool, rng, aug);
    const std::string name = "preview_" + media::frame_filename(i);
    media::save_frame(a.out / name, r.video.frames.front());
    index << json{{"file", name},
                  {"frame", frames[v][f].filename().string()},
                  {"lambda", r.lambda},
                  {"scene_id", pool_ids[r.scene_index]},
                  {"video_id", clip.id}}
                 .dump()
          << '\n';
  }
  write_text(a.out / "preview.jsonl", index.str());
  return 0;
}

// ---------------------------------------------------------------------------

struct ScoreWerArgs {
  fs::path ref, hyp;
};

int cmd_score_wer(const ScoreWerArgs& a) {
  require_file(a.ref, "reference file");
  require_file(a.hyp, "hypothesis file");
  const auto refs = read_lines(a.ref);
  const auto hyps = read_lines(a.hyp);
  if (refs.size() != hyps.size())
    throw ValidationError("reference has " + std::to_string(refs.size()) +
                          " line(s) but hypothesis has " + std::to_string(hyps.size()));
  std::vector<std::pair<metrics::GlossSeq, metrics::GlossSeq>> pairs;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto r = metrics::parse_glosses(refs[i]);
    if (r.empty()) throw ValidationError("reference line " + std::to_string(i + 1) + " is empty");
    pairs.emplace_back(std::move(r), metrics::parse_glosses(hyps[i]));
  }
  if (pairs.empty()) throw ValidationError("reference file has no utterances");
  const auto b = metrics::corpus_wer(pairs);
  std::cout << pretty({{"wer", b.wer},
                       {"substitutions", b.substitutions},
                       {"deletions", b.deletions},
                       {"insertions", b.insertions},
                       {"matches", b.matches},
                       {"ref_words", b.ref_len},
                       {"utterances", pairs.size()}});
  return 0;
}

// ---------------------------------------------------------------------------

struct GradCheckArgs {
  double threshold = 1e-4;
  std::uint64_t seed = kDefaultSeed;
  std::size_t instances = 100;
  double step = 1e-5;
};

int cmd_grad_check(const GradCheckArgs& a) {
  if (!(a.threshold >= 0.0)) throw ValidationError("threshold must be non-negative");
  if (!(a.step > 0.0)) throw ValidationError("step must be positive");
  const auto reports = gradcheck::run_all({a.step, a.instances, a.seed});
  bool ok = true;
  std::cout << std::left << std::setw(12) << "component" << std::right << std::setw(16)
            << "max rel error" << std::setw(10) << "checked" << std::setw(10) << "skipped"
            << "  status\n";
  for (const auto& r : reports) {
    const bool pass = r.max_rel_error <= a.threshold;
    ok = ok && pass;
    std::ostringstream err;
    err << std::scientific << std::setprecision(3) << r.max_rel_error;
    std::cout << std::left << std::setw(12) << r.name << std::right << std::setw(16) << err.str()
              << std::setw(10) << r.checked << std::setw(10) << r.skipped << "  "
              << (pass ? "ok" : "FAIL") << '\n';
  }
  if (!ok) {
    std::cerr << "gradient check failed: error above threshold " << a.threshold << '\n';
    return static_cast<int>(ErrorKind::numeric);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct DemoArgs {
  fs::path out;
  fs::path config;
  std::uint64_t seed = kDefaultSeed;
  std::size_t epochs = 0;
  std::vector<std::string> conditions;
};

int cmd_demo(const DemoArgs& a) {
  toytrain::ExperimentConfig cfg = toytrain::default_experiment(a.seed);
  if (!a.config.empty()) {
    require_file(a.config, "experiment config");
    std::ifstream in(a.config);
    cfg = json::parse(in).get<toytrain::ExperimentConfig>();
    cfg.synth.seed = a.seed;
    cfg.train.seed = a.seed;
  }
  if (a.epochs > 0) cfg.train.epochs = a.epochs;
  if (!a.conditions.empty()) {
    cfg.conditions.clear();
    for (const auto& c : a.conditions) cfg.conditions.push_back(toytrain::parse_condition(c));
  }
  fs::create_directories(a.out);
  const auto rep = toytrain::run_experiment(cfg);
  write_text(a.out / "report.json", pretty(toytrain::report_json(rep)));
  write_text(a.out / "report.txt", toytrain::report_table(rep));
  json timing{{"seconds", rep.seconds}, {"conditions", json::object()}};
  for (const auto& row : rep.rows) {
    timing["conditions"][toytrain::condition_name(row.condition)] = row.seconds;
    if (row.student.dae_enabled) {
      const fs::path dir = a.out / "checkpoints";
      fs::create_directories(dir);
      const std::string stem = toytrain::condition_name(row.condition);
      dae::save_params(dir / (stem + "_dae.bin"), row.student.branch.dae);
      write_text(dir / (stem + "_loss.json"), pretty(json(cfg.train.loss)));
    }
  }
  write_text(a.out / "timing.json", pretty(timing));
  std::cout << toytrain::report_table(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Background-shift benchmark synthesis, background randomization and DAE toolkit",
               "slrobust"};
  app.require_subcommand(1);
  app.fallthrough(false);

  GenBenchmarkArgs gb;
  auto* s_gb = app.add_subcommand("gen-benchmark", "Matte sign videos onto scene images");
  s_gb->add_option("--cslr-manifest", gb.manifest, "Input manifest (JSON Lines)")->required();
  s_gb->add_option("--scene-dir", gb.scenes, "Scene catalog directory or index file")->required();
  s_gb->add_option("--out", gb.out, "Output root")->required();
  add_seed(s_gb, gb.seed);
  s_gb->add_option("--splits", gb.splits, "Number of splits")->default_val(3);
  s_gb->add_option("--first-split", gb.first_split, "Id of the first split")->default_val(0);
  s_gb->add_option("--jobs", gb.jobs, "Worker threads")->default_val(1);

  GenTrainPoolArgs tp;
  auto* s_tp = app.add_subcommand("gen-train-pool", "Select K scene images per class for training");
  s_tp->add_option("--scene-dir", tp.scenes, "Scene catalog directory or index file")->required();
  s_tp->add_option("--out", tp.out, "Output directory")->required();
  s_tp->add_option("--k-per-class", tp.k, "Images per class")->default_val(10);
  add_seed(s_tp, tp.seed);

  BrPreviewArgs bp;
  auto* s_bp = app.add_subcommand("br-preview", "Render background-randomized frames");
  s_bp->add_option("--cslr-manifest", bp.manifest, "Input manifest (JSON Lines)")->required();
  s_bp->add_option("--scene-dir", bp.scenes, "Scene catalog directory or index file")->required();
  s_bp->add_option("--out", bp.out, "Output directory")->required();
  s_bp->add_option("--k-per-class", bp.k, "Pool images per class")->default_val(10);
  s_bp->add_option("--lambda-min", bp.lambda_min, "Lower mixup weight")->default_val(0.1);
  s_bp->add_option("--lambda-max", bp.lambda_max, "Upper mixup weight")->default_val(0.6);
  s_bp->add_option("-n,--count", bp.count, "Frames to render")->default_val(8);
  add_seed(s_bp, bp.seed);

  ScoreWerArgs sw;
  auto* s_sw = app.add_subcommand("score-wer", "Corpus WER of hypothesis lines against references");
  s_sw->add_option("--ref", sw.ref, "Reference file, one utterance per line")->required();
  s_sw->add_option("--hyp", sw.hyp, "Hypothesis file, one utterance per line")->required();

  GradCheckArgs gc;
  auto* s_gc = app.add_subcommand("grad-check", "Finite-difference check of analytic gradients");
  s_gc->add_option("--threshold", gc.threshold, "Maximum relative error")->default_val(1e-4);
  s_gc->add_option("--instances", gc.instances, "Random instances per component")->default_val(100);
  s_gc->add_option("--step", gc.step, "Central difference step")->default_val(1e-5);
  add_seed(s_gc, gc.seed);

  DemoArgs dm;
  auto* s_dm = app.add_subcommand("demo", "Train baseline, BR and BR+DAE on synthetic data");
  s_dm->add_option("--out", dm.out, "Output directory")->required();
  s_dm->add_option("--config", dm.config, "Experiment config (JSON)");
  s_dm->add_option("--epochs", dm.epochs, "Override training epochs");
  s_dm->add_option("--conditions", dm.conditions, "Subset of baseline, br, br_dae");
  add_seed(s_dm, dm.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    if (s_gb->parsed()) return cmd_gen_benchmark(gb);
    if (s_tp->parsed()) return cmd_gen_train_pool(tp);
    if (s_bp->parsed()) return cmd_br_preview(bp);
    if (s_sw->parsed()) return cmd_score_wer(sw);
    if (s_gc->parsed()) return cmd_grad_check(gc);
    if (s_dm->parsed()) return cmd_demo(dm);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::io);
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::validation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::validation);
  }
  return static_cast<int>(ErrorKind::usage);
}
