// Command-line driver for the lexical-competition pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexcomp/pipeline.hpp"
#include "lexcomp/synthetic.hpp"

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

lexcomp::PipelineConfig load_with_overrides(const std::string& config_path,
                                            const std::string& out_override,
                                            const std::string& cache_override) {
  lexcomp::PipelineConfig cfg = lexcomp::load_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (!cache_override.empty()) cfg.cache_dir = cache_override;
  return cfg;
}

void print_corpus_stats(const lexcomp::CorpusStats& st) {
  std::printf("  documents            %lld (out of range: %lld)\n",
              static_cast<long long>(st.documents),
              static_cast<long long>(st.documents_out_of_range));
  std::printf("  input tokens         %lld\n", static_cast<long long>(st.input_tokens));
  std::printf("  kept tokens          %lld\n", static_cast<long long>(st.kept_tokens));
  std::printf("  dropped: pos %lld, mention %lld, empty %lld, stopword %lld\n",
              static_cast<long long>(st.dropped_pos), static_cast<long long>(st.dropped_mention),
              static_cast<long long>(st.dropped_empty),
              static_cast<long long>(st.dropped_stopword));
}

int cmd_report(const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::path(out_dir) / "run_manifest.json";
  if (!fs::exists(manifest_path)) {
    std::fprintf(stderr, "lexcomp: error: no run_manifest.json under '%s' (run analyze first)\n",
                 out_dir.c_str());
    return 1;
  }
  std::ifstream in(manifest_path);
  nlohmann::json j;
  in >> j;
  std::printf("run summary (%s)\n", out_dir.c_str());
  std::printf("  version %s  config %s  seed %llu\n", j.value("version", "?").c_str(),
              j.value("config_hash", "?").c_str(),
              static_cast<unsigned long long>(j.value("seed", 0ULL)));
  std::printf("  units [%d, %d], vocabulary %lld\n", j["unit_range"][0].get<int>(),
              j["unit_range"][1].get<int>(),
              static_cast<long long>(j.value("vocab_size", 0LL)));
  std::printf("  targets %lld, analysis rows %lld (skipped: topic %lld, fold %lld, neighbors %lld)\n",
              static_cast<long long>(j.value("n_targets", 0LL)),
              static_cast<long long>(j.value("n_analysis_rows", 0LL)),
              static_cast<long long>(j.value("skipped_topic_absent", 0LL)),
              static_cast<long long>(j.value("skipped_fold_failed", 0LL)),
              static_cast<long long>(j.value("skipped_no_neighbors", 0LL)));
  if (j.contains("regression") && j["regression"].is_object()) {
    const auto& r = j["regression"];
    std::printf("  regression: n=%lld, advection coef %.6g (p=%.4g), partial R2 %.4g\n",
                static_cast<long long>(r.value("rows_used", 0LL)),
                r.value("advection_coef", 0.0), r.value("advection_p", 1.0),
                r.value("partial_r2_comparative", 0.0));
  } else if (j.contains("regression")) {
    std::printf("  regression: %s\n", j["regression"].get<std::string>().c_str());
  }
  if (j.contains("randomization") && j["randomization"].is_object()) {
    const auto& r = j["randomization"];
    std::printf("  randomization: R=%d, fraction significant %.4g\n", r.value("R", 0),
                r.value("fraction_significant", 0.0));
  } else if (j.contains("randomization")) {
    std::printf("  randomization: %s\n", j["randomization"].get<std::string>().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexcomp: lexical competition and topical advection pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_override, cache_override;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config,-c", config_path, "pipeline config file (key = value lines)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_override, "override out_dir from the config");
    cmd->add_option("--cache", cache_override, "override cache_dir from the config");
  };

  auto* c_ingest = app.add_subcommand("ingest", "build (or reuse) the token cache");
  add_common(c_ingest);
  bool force = false;
  c_ingest->add_flag("--force", force, "rebuild the cache even if it matches the config");

  auto* c_targets = app.add_subcommand("targets", "select frequency-change targets");
  add_common(c_targets);

  auto* c_analyze =
      app.add_subcommand("analyze", "run the full pipeline and write all artifacts");
  add_common(c_analyze);

  auto* c_regress = app.add_subcommand("regress", "refit the regression from analysis.csv");
  add_common(c_regress);
  std::string analysis_path;
  c_regress->add_option("--analysis", analysis_path,
                        "analysis table to refit (default: <out_dir>/analysis.csv)");

  auto* c_random =
      app.add_subcommand("randomize", "rerun the permutation test from saved inputs");
  add_common(c_random);
  std::string inputs_path;
  int runs = -1;
  std::uint64_t rand_seed = 0;
  bool seed_given = false;
  c_random->add_option("--inputs", inputs_path,
                       "saved inputs (default: <out_dir>/randomization_inputs.bin)");
  c_random->add_option("--r", runs, "number of permutations (default: randomize_r)");
  c_random->add_option("--seed", rand_seed, "master seed for the permutations")
      ->each([&](const std::string&) { seed_given = true; });

  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus with planted effects");
  std::string synth_out;
  lexcomp::SyntheticSpec spec;
  std::vector<int> cells;
  c_synth->add_option("--out", synth_out, "directory for corpus.jsonl, truth.json, config.txt")
      ->required();
  c_synth->add_option("--units", spec.n_units, "number of yearly units");
  c_synth->add_option("--tokens-per-unit", spec.tokens_per_unit, "tokens emitted per unit");
  c_synth->add_option("--span-len", spec.span_len, "span length the corpus is tuned for");
  c_synth->add_option("--seed", spec.seed, "generator seed");
  c_synth
      ->add_option("--cells", cells,
                   "targets per cell: twin_stable,twin_rising,open_stable,open_rising")
      ->delimiter(',')
      ->expected(4);

  auto* c_report = app.add_subcommand("report", "print a summary of a finished run");
  std::string report_out;
  c_report->add_option("--out", report_out, "out_dir of the run");
  c_report->add_option("--config,-c", config_path, "config file (used to locate out_dir)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    Timer timer;
    if (*c_ingest) {
      lexcomp::Pipeline p(load_with_overrides(config_path, out_override, cache_override));
      p.ingest(force);
      std::printf("ingest done in %.1f s; vocabulary %u\n", timer.seconds(),
                  static_cast<unsigned>(p.vocabulary().size()));
      print_corpus_stats(p.corpus_stats());
    } else if (*c_targets) {
      lexcomp::Pipeline p(load_with_overrides(config_path, out_override, cache_override));
      const auto& ts = p.targets();
      std::printf("targets done in %.1f s; %zu targets -> %s/targets.csv\n", timer.seconds(),
                  ts.size(), p.config().out_dir.c_str());
    } else if (*c_analyze) {
      lexcomp::Pipeline p(load_with_overrides(config_path, out_override, cache_override));
      p.analyze();
      std::printf("analyze done in %.1f s; %zu analysis rows -> %s\n", timer.seconds(),
                  p.analysis_rows().size(), p.config().out_dir.c_str());
      return cmd_report(p.config().out_dir);
    } else if (*c_regress) {
      lexcomp::Pipeline p(load_with_overrides(config_path, out_override, cache_override));
      if (analysis_path.empty())
        analysis_path = (std::filesystem::path(p.config().out_dir) / "analysis.csv").string();
      const auto models = p.regress_from(analysis_path);
      const int adv = models.full.index_of("advection");
      std::printf("regress done in %.1f s; n=%lld advection coef %.6g (p=%.4g)\n",
                  timer.seconds(), static_cast<long long>(models.full.n),
                  models.full.coef(adv), models.full.pvalue(adv));
    } else if (*c_random) {
      lexcomp::Pipeline p(load_with_overrides(config_path, out_override, cache_override));
      if (inputs_path.empty())
        inputs_path =
            (std::filesystem::path(p.config().out_dir) / "randomization_inputs.bin").string();
      if (runs < 0) runs = p.config().randomize_r;
      if (runs <= 0)
        throw lexcomp::Error("randomize: pass --r or set randomize_r in the config");
      if (!seed_given) rand_seed = lexcomp::derive_seed(p.config().seed, 0xA11D0ULL);
      const auto res = p.randomize_from(inputs_path, runs, rand_seed);
      std::printf("randomize done in %.1f s; R=%d fraction significant %.4g\n", timer.seconds(),
                  res.runs, res.fraction_significant);
    } else if (*c_synth) {
      namespace fs = std::filesystem;
      if (!cells.empty()) {
        spec.n_twin_stable = cells[0];
        spec.n_twin_rising = cells[1];
        spec.n_open_stable = cells[2];
        spec.n_open_rising = cells[3];
      }
      fs::create_directories(synth_out);
      const auto corpus = (fs::path(synth_out) / "corpus.jsonl").string();
      const auto truth = lexcomp::generate_synthetic(spec, corpus);
      lexcomp::save_truth(truth, spec, (fs::path(synth_out) / "truth.json").string());
      std::ofstream cfg_out(fs::path(synth_out) / "config.txt");
      cfg_out << "# generated alongside a synthetic corpus\n"
              << "corpus = " << corpus << "\n"
              << "unit_kind = year\n"
              << "unit_min = " << truth.unit_min << "\n"
              << "unit_max = " << truth.unit_max << "\n"
              << "span_len = " << spec.span_len << "\n"
              << "seed = " << spec.seed << "\n"
              << "direction = increase\n"
              << "lsa_k = 4000      # >= vocabulary: exact spaces, cheap at this scale\n"
              << "randomize_r = 0   # raise to 200+ for the permutation test\n"
              << "out_dir = " << (fs::path(synth_out) / "run").string() << "\n";
      if (!cfg_out) throw lexcomp::Error("cannot write config.txt under " + synth_out);
      std::printf("synth done in %.1f s; %zu planted targets, %lld tokens -> %s\n",
                  timer.seconds(), truth.targets.size(),
                  static_cast<long long>(truth.total_tokens), synth_out.c_str());
    } else if (*c_report) {
      if (report_out.empty()) {
        if (config_path.empty())
          throw lexcomp::Error("report: pass --out or --config");
        report_out = load_with_overrides(config_path, out_override, cache_override).out_dir;
      }
      return cmd_report(report_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lexcomp: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
