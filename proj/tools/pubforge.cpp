// pubforge command-line driver: ingest, fit, predict, evaluate, synth.

#include <openssl/evp.h>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pubforge/pubforge.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace pubforge;

namespace {

std::string sha256_file(const std::string& path) {
  auto data = table::slurp(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 failed for '" + path + "'");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::vector<std::string> settings;
  bool plots = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "config file (key = value)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.settings, "override a config key: key=value")->take_all();
}

/// Defaults < config file < PUBFORGE_* environment < command line.
RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  std::vector<std::string> env;
  for (char** e = environ; *e; ++e) env.emplace_back(*e);
  apply_settings(cfg, env_overrides(env), fs::current_path());
  for (const auto& s : o.settings) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1), fs::current_path());
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out = o.out;
  if (o.threads) cfg.threads = static_cast<unsigned>(*o.threads);
  if (o.plots) cfg.plots = true;
  return cfg;
}

/// Tracks inputs and outputs for the content-hash manifest.
class Run {
 public:
  Run(std::string command, std::string out_dir) : command_(std::move(command)), out_(std::move(out_dir)) {
    fs::create_directories(out_);
  }

  std::string output(const std::string& name) {
    outputs_.push_back(name);
    return (fs::path(out_) / name).string();
  }
  void input(const std::string& path) { inputs_.push_back(path); }
  void param(const std::string& key, const std::string& value) { params_.emplace_back(key, value); }

  void write_manifest() {
    auto path = (fs::path(out_) / ("manifest_" + command_ + ".csv")).string();
    auto out = table::open_output(path);
    table::Writer w(out);
    w.row("kind", "name", "sha256");
    for (const auto& p : inputs_) w.row("input", display(p), sha256_file(p));
    for (const auto& n : outputs_) w.row("output", n, sha256_file((fs::path(out_) / n).string()));
    for (const auto& [k, v] : params_) w.row("param", k, v);
  }

 private:
  // Inputs inside the output directory are listed relative to it, so a
  // manifest does not depend on where the run was placed.
  std::string display(const std::string& p) const {
    auto rel = fs::path(p).lexically_normal().lexically_relative(fs::path(out_).lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return fs::path(p).lexically_normal().generic_string();
  }

  std::string command_, out_;
  std::vector<std::string> inputs_, outputs_;
  std::vector<std::pair<std::string, std::string>> params_;
};

HistorySet load_histories(Run& run, const RunConfig& cfg) {
  auto path = cfg.histories_path();
  run.input(path);
  auto in = table::open_input(path);
  return read_histories(in);
}

CreativityModel load_model(Run& run, const RunConfig& cfg) {
  auto path = cfg.model_path();
  run.input(path);
  auto in = table::open_input(path);
  auto model = read_model(in);
  if (model.t0() != *cfg.train_start || model.horizon() != cfg.J()) {
    throw ConfigError("model grid (t0=" + std::to_string(model.t0()) + ", J=" + std::to_string(model.horizon()) +
                      ") does not match the configured windows");
  }
  return model;
}

int cmd_ingest(const RunConfig& cfg, const std::string& config_path) {
  validate(cfg, ConfigNeeds::ingest);
  if (cfg.corpus.empty()) throw ConfigError("missing required key 'corpus'");
  Run run("ingest", cfg.out);
  if (!config_path.empty()) run.input(config_path);

  std::optional<EntityTable> entities;
  if (!cfg.entities.empty()) {
    run.input(cfg.entities);
    auto in = table::open_input(cfg.entities);
    entities = EntityTable::load(in);
  }
  std::vector<PublicationRecord> records;
  auto stats_path = run.output("ingest_stats.csv");
  auto stats_out = table::open_output(stats_path);
  table::Writer sw(stats_out);
  sw.row("file", "records_seen", "skipped_incomplete", "skipped_out_of_range", "ignored_elements", "records_kept");
  ParseStats total;
  for (const auto& path : cfg.corpus) {
    run.input(path);
    bool xml = cfg.format == "xml" || (cfg.format == "auto" && fs::path(path).extension() == ".xml");
    auto in = table::open_input(path);
    auto result = xml ? parse_dblp_xml(in, cfg.ingest_options(), entities ? &*entities : nullptr)
                      : parse_tabular(in, cfg.delimiter, cfg.ingest_options());
    sw.row(fs::path(path).filename().string(), result.stats.records_seen, result.stats.skipped_incomplete,
           result.stats.skipped_out_of_range, result.stats.ignored_elements, result.records.size());
    total += result.stats;
    records.insert(records.end(), result.records.begin(), result.records.end());
  }
  records = deduplicate(std::move(records));
  sw.row("total", total.records_seen, total.skipped_incomplete, total.skipped_out_of_range, total.ignored_elements,
         records.size());
  stats_out.close();

  auto histories = build_histories(std::move(records));
  {
    auto out = table::open_output(run.output("histories.csv"));
    write_histories(out, histories);
  }
  run.write_manifest();
  std::cerr << "ingest: " << histories.size() << " authors\n";
  return 0;
}

int cmd_fit(const RunConfig& cfg, const std::string& config_path) {
  validate(cfg, ConfigNeeds::windows);
  Run run("fit", cfg.out);
  if (!config_path.empty()) run.input(config_path);
  auto histories = load_histories(run, cfg);
  auto split = make_split(histories, SplitRole::training, cfg.training_windows());
  auto matrix = productivity_matrix(split, histories, cfg.max_cohort);
  ModelOptions options;
  options.fit.min_cells = cfg.min_cells;
  options.cohort_limit_cap = cfg.max_predict_cohort;
  auto model = build_model(matrix, cfg.J(), cfg.significance_level, cfg.fit_mode, options);
  {
    auto out = table::open_output(run.output("matrix.csv"));
    write_matrix(out, matrix);
  }
  {
    auto out = table::open_output(run.output("model.csv"));
    write_model(out, model);
  }
  run.write_manifest();
  std::cerr << "fit: " << split.authors.size() << " training researchers, I_1=" << model.cohort_limit() << '\n';
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& config_path) {
  validate(cfg, ConfigNeeds::windows);
  Run run("predict", cfg.out);
  if (!config_path.empty()) run.input(config_path);
  auto histories = load_histories(run, cfg);
  auto model = load_model(run, cfg);
  auto split = make_split(histories, SplitRole::test, cfg.test_windows(), cfg.test_membership);
  auto ens = simulate_group(model, model.t0(), split, histories, {cfg.replicates, cfg.seed, cfg.threads});
  {
    auto out = table::open_output(run.output("ensemble_summary.csv"));
    write_ensemble_summary(out, ens);
  }
  {
    auto out = table::open_output(run.output("ensemble_replicates.csv"));
    write_ensemble_replicates(out, ens, cfg.dump_replicates);
  }
  {
    auto out = table::open_output(run.output("forecast_stats.csv"));
    table::Writer w(out);
    w.row("key", "value");
    w.row("test_researchers", ens.test_researchers);
    w.row("forecast_researchers", static_cast<long long>(ens.researchers.size()));
    w.row("excluded_inactive", ens.excluded_inactive);
    w.row("excluded_overflow", ens.excluded_overflow);
    w.row("coverage", ens.coverage());
    w.row("cohort_limit", model.cohort_limit());
    w.row("clamp_lookups", ens.clamp_tally);
    w.row("replicates", ens.replicates);
  }
  run.param("seed", std::to_string(cfg.seed));
  run.param("replicates", std::to_string(cfg.replicates));
  run.write_manifest();
  std::cerr << "predict: " << ens.researchers.size() << " of " << ens.test_researchers
            << " test researchers within I_1=" << model.cohort_limit() << '\n';
  return 0;
}

std::vector<PlotSeries> first_cohorts(const std::map<int, PlotSeries>& by_cohort, std::size_t limit) {
  std::vector<PlotSeries> out;
  for (const auto& [i, s] : by_cohort) {
    if (out.size() == limit) break;
    out.push_back(s);
  }
  return out;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& config_path) {
  validate(cfg, ConfigNeeds::windows);
  Run run("evaluate", cfg.out);
  if (!config_path.empty()) run.input(config_path);
  auto histories = load_histories(run, cfg);
  auto model = load_model(run, cfg);
  auto summary_path = (fs::path(cfg.ensemble_path()) / "ensemble_summary.csv").string();
  auto dump_path = (fs::path(cfg.ensemble_path()) / "ensemble_replicates.csv").string();
  run.input(summary_path);
  run.input(dump_path);
  EnsembleSummary summary;
  ReplicateDump dump;
  {
    auto in = table::open_input(summary_path);
    summary = read_ensemble_summary(in);
  }
  {
    auto in = table::open_input(dump_path);
    dump = read_ensemble_replicates(in);
  }
  const int T0 = *cfg.history_start, tX = *cfg.test_start, tY = *cfg.test_end;
  auto training = make_split(histories, SplitRole::training, cfg.training_windows());
  auto test = make_split(histories, SplitRole::test, cfg.test_windows(), cfg.test_membership);
  auto matrix = productivity_matrix(training, histories, cfg.max_cohort);
  auto write = [&](const std::string& name, auto&& fn) {
    auto out = table::open_output(run.output(name));
    fn(out);
  };

  auto ks_rows = poisson_ks_by_year(training, histories, *cfg.train_start, *cfg.forecast_end - 1,
                                    std::min(20, cfg.max_cohort), cfg.n_boot, cfg.seed);
  write("fig1_ks.csv", [&](std::ostream& o) { write_ks_groups(o, ks_rows); });

  FitOptions fit_options;
  fit_options.min_cells = cfg.min_cells;
  auto bands = trend_bands(matrix, model, fit_options);
  write("fig4_trend.csv", [&](std::ostream& o) { write_trend_bands(o, bands); });

  auto paths = predicted_paths(summary, histories, T0, tX, tY);
  auto trend = trend_tables(paths, histories, T0, tX);
  auto corr = correlations_by_year(paths, histories, T0, tX);
  write("fig5_trend_fit.csv", [&](std::ostream& o) { write_trend_table(o, trend); });
  write("fig5_correlations.csv", [&](std::ostream& o) { write_correlations(o, corr); });

  std::vector<DistributionRow> dist;
  std::vector<DistributionTest> dist_tests;
  distribution_comparison(dump, histories, T0, tX, tY, cfg.n_boot, cfg.seed, dist, dist_tests);
  write("fig6_dist.csv", [&](std::ostream& o) { write_distribution(o, dist); });
  write("fig6_ks.csv", [&](std::ostream& o) { write_distribution_tests(o, dist_tests); });

  std::vector<SimontonCohortRow> sim_fits;
  std::vector<SimontonSeriesRow> sim_series;
  simonton_comparison(test, histories, *cfg.forecast_end, std::min(18, cfg.max_cohort), sim_fits, sim_series);
  write("fig8_simonton.csv", [&](std::ostream& o) { write_simonton_fits(o, sim_fits); });
  write("fig8_series.csv", [&](std::ostream& o) { write_simonton_series(o, sim_series); });

  auto acf = acf_profile(test, histories, tX, tY, cfg.max_cohort);
  write("fig9_acf.csv", [&](std::ostream& o) { write_acf(o, acf); });

  if (cfg.plots) {
    std::map<int, PlotSeries> eta, fitted, actual, predicted, acf_series, sim_obs;
    for (const auto& b : bands) {
      auto& e = eta[b.cohort];
      e.label = "i=" + std::to_string(b.cohort);
      e.markers = true;
      e.x.push_back(b.year);
      e.y.push_back(b.eta.value_or(NAN));
      auto& f = fitted[b.cohort];
      f.label = e.label + " fit";
      f.x.push_back(b.year);
      f.y.push_back(b.fitted);
    }
    for (const auto& r : trend) {
      auto& a = actual[r.cohort];
      a.label = "n(" + std::to_string(r.cohort) + ",y)";
      a.markers = true;
      a.x.push_back(r.year);
      a.y.push_back(r.actual_mean);
      auto& p = predicted[r.cohort];
      p.label = "m(" + std::to_string(r.cohort) + ",y)";
      p.x.push_back(r.year);
      p.y.push_back(r.predicted_mean);
    }
    for (const auto& r : acf) {
      auto& s = acf_series[r.cohort];
      s.label = "i=" + std::to_string(r.cohort);
      s.x.push_back(r.lag);
      s.y.push_back(r.mean_r.value_or(NAN));
    }
    for (const auto& r : sim_series) {
      auto& s = sim_obs[r.cohort];
      s.label = "i=" + std::to_string(r.cohort);
      s.markers = true;
      s.x.push_back(r.year);
      s.y.push_back(r.mean);
    }
    auto merge = [](std::vector<PlotSeries> a, const std::vector<PlotSeries>& b) {
      a.insert(a.end(), b.begin(), b.end());
      return a;
    };
    write("fig4_trend.svg", [&](std::ostream& o) {
      write_svg_plot(o, "productivity by cohort", "t_j", "eta",
                     merge(first_cohorts(eta, 5), first_cohorts(fitted, 5)));
    });
    write("fig5_trend_fit.svg", [&](std::ostream& o) {
      write_svg_plot(o, "actual vs predicted cumulative count", "year", "publications",
                     merge(first_cohorts(actual, 5), first_cohorts(predicted, 5)));
    });
    write("fig8_simonton.svg", [&](std::ostream& o) {
      write_svg_plot(o, "mean annual publications", "year", "publications", first_cohorts(sim_obs, 8));
    });
    write("fig9_acf.svg", [&](std::ostream& o) {
      write_svg_plot(o, "mean autocorrelation", "lag", "r", first_cohorts(acf_series, 8));
    });
  }
  run.param("seed", std::to_string(cfg.seed));
  run.param("n_boot", std::to_string(cfg.n_boot));
  run.write_manifest();
  std::cerr << "evaluate: " << paths.size() << " forecast researchers\n";
  return 0;
}

int cmd_synth(const CommonOptions& o) {
  if (o.config.empty()) throw ConfigError("synth needs --config with a generator spec");
  GeneratorSpec spec;
  {
    auto in = table::open_input(o.config);
    spec = parse_generator_spec(in);
  }
  if (o.seed) spec.seed = *o.seed;
  Run run("synth", o.out.empty() ? "." : o.out);
  run.input(o.config);
  auto records = generate_corpus(spec);
  {
    auto out = table::open_output(run.output("corpus.csv"));
    write_tabular(out, records);
  }
  run.param("seed", std::to_string(spec.seed));
  run.write_manifest();
  std::cerr << "synth: " << records.size() << " records for " << spec.n_authors << " authors\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise Poisson forecasting of researchers' publication counts"};
  app.require_subcommand(1);
  CommonOptions ingest, fit, predict, evaluate, synth;
  auto* c_ingest = app.add_subcommand("ingest", "parse corpora into per-author histories");
  auto* c_fit = app.add_subcommand("fit", "build the productivity matrix and fit cohort rates");
  auto* c_predict = app.add_subcommand("predict", "simulate test researchers forward");
  auto* c_evaluate = app.add_subcommand("evaluate", "write validation tables");
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(c_ingest, ingest);
  add_common(c_fit, fit);
  add_common(c_predict, predict);
  add_common(c_evaluate, evaluate);
  c_evaluate->add_flag("--plots", evaluate.plots, "also write SVG charts");
  c_synth->add_option("--config", synth.config, "generator spec file")->required();
  c_synth->add_option("--seed", synth.seed, "random seed (overrides the generator file)");
  c_synth->add_option("--out", synth.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_ingest) return cmd_ingest(resolve_config(ingest), ingest.config);
    if (*c_fit) return cmd_fit(resolve_config(fit), fit.config);
    if (*c_predict) return cmd_predict(resolve_config(predict), predict.config);
    if (*c_evaluate) return cmd_evaluate(resolve_config(evaluate), evaluate.config);
    if (*c_synth) return cmd_synth(synth);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
