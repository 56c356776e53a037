// compforge: design-space pools, corpus analysis and configuration
// recommendation from one binary.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "compforge/analysis.hpp"
#include "compforge/corpus.hpp"
#include "compforge/csv.hpp"
#include "compforge/design_space.hpp"
#include "compforge/errors.hpp"
#include "compforge/kernels.hpp"
#include "compforge/manifest.hpp"
#include "compforge/meta_features.hpp"
#include "compforge/meta_predictor.hpp"
#include "compforge/pool.hpp"
#include "compforge/synthetic.hpp"

#ifndef COMPFORGE_DEFAULT_SPACE
#define COMPFORGE_DEFAULT_SPACE "spaces/tscomp_table1.json"
#endif

namespace fs = std::filesystem;
using namespace compforge;

namespace {

std::string fmt(double v) { return csv::format_double(v); }

std::string default_space() {
  if (const char* env = std::getenv("COMPFORGE_SPACE"); env && *env) return env;
  return COMPFORGE_DEFAULT_SPACE;
}

// Output file or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path_ != "-") {
      if (const auto parent = fs::path(path_).parent_path(); !parent.empty()) fs::create_directories(parent);
      file_.open(path_, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write " + path_);
    }
  }
  std::ostream& stream() { return path_ == "-" ? std::cout : file_; }

 private:
  std::string path_;
  std::ofstream file_;
};

void write_banner(std::ostream& out) { out << "# " << kFixedEffectsBanner << '\n'; }

// Every flag of the subcommand (given or defaulted) goes into the manifest.
RunManifest make_manifest(const CLI::App* cmd, std::uint64_t seed) {
  RunManifest m;
  std::string name = cmd->get_name();
  for (auto* p = cmd->get_parent(); p && p->get_parent(); p = p->get_parent()) name = p->get_name() + " " + name;
  m.command = name;
  for (const auto* opt : cmd->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ";") + r;
    } else {
      value = opt->get_default_str();
    }
    m.flags[opt->get_name()] = value;
  }
  m.seed = seed;
  m.timestamp = manifest_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& out, const std::vector<std::string>& inputs) {
  for (const auto& in : inputs)
    if (!in.empty() && in != "-") m.add_input(in);
  if (out.empty() || out == "-") return;
  m.write(out + ".manifest.json");
}

std::vector<PoolEntry> load_pool(const std::string& path, const DesignSpace& space) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open pool file " + path);
  return read_pool_csv(in, space);
}

Grouping parse_grouping(const std::string& g) {
  if (g == "dataset-horizon") return Grouping::DatasetHorizon;
  if (g == "dataset") return Grouping::Dataset;
  throw std::invalid_argument("unknown grouping '" + g + "'");
}

Controls parse_controls(const std::string& c) {
  if (c == "both") return {true, true};
  if (c == "dataset") return {true, false};
  if (c == "horizon") return {false, true};
  if (c == "none") return {false, false};
  throw std::invalid_argument("unknown controls '" + c + "'");
}

std::size_t require_dimension(const DesignSpace& space, const std::string& id) {
  const auto d = space.dimension_index(id);
  if (!d) throw ReferenceError("unknown dimension '" + id + "'");
  return *d;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::map<std::string, std::vector<double>> meta_by_dataset(const std::string& path) {
  std::map<std::string, std::vector<double>> out;
  for (auto& v : load_embeddings(path)) out[v.dataset_id] = std::move(v.values);
  return out;
}

struct Common {
  std::string space = default_space();
  std::uint64_t seed = 0;
  std::string out = "-";
};

// Shared flags of the analyze family.
struct AnalyzeArgs {
  std::string corpus;
  std::string pool;
  std::string metric = "mse";
  std::string target = "standardized";
  std::string group = "dataset-horizon";
  std::string controls = "both";
};

JoinedTable load_joined(const AnalyzeArgs& a, const DesignSpace& space) {
  const auto corpus = load_corpus(a.corpus);
  const auto grouping = parse_grouping(a.group);
  ScoreView view;
  if (a.target == "standardized")
    view = standardize(corpus, a.metric, grouping);
  else if (a.target == "rank")
    view = rank_normalize(corpus, a.metric, grouping);
  else
    throw std::invalid_argument("unknown target '" + a.target + "'");
  print_warnings(view.warnings);
  const auto pool = load_pool(a.pool, space);
  return join(view, pool, space);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compforge: constrained pairwise pools, corpus statistics and configuration recommendation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->envname("COMPFORGE_THREADS");

  Common common;
  AnalyzeArgs aargs;
  std::function<void()> action;
  auto bind = [&](CLI::App* cmd, std::function<void()> fn) { cmd->callback([&action, fn] { action = fn; }); };
  auto add_space = [&](CLI::App* cmd) {
    cmd->add_option("--space", common.space, "design space JSON")->envname("COMPFORGE_SPACE")->capture_default_str();
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", common.seed, "random seed")->envname("COMPFORGE_SEED")->capture_default_str();
  };
  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", common.out, "output file, - for stdout")->capture_default_str(); };

  // space
  auto* space_cmd = app.add_subcommand("space", "inspect a design space")->require_subcommand(1);
  std::string space_pos;
  auto* sv = space_cmd->add_subcommand("validate", "check a space document and print its size");
  sv->add_option("file", space_pos, "space JSON (defaults to --space)");
  add_space(sv);
  bind(sv, [&] {
    const auto space = load_space(space_pos.empty() ? common.space : space_pos);
    std::cout << space.size() << " dimensions, " << space.total_components() << " components, "
              << space.rules().size() << " rules, " << space.optional_rules().size() << " optional rules, "
              << all_pairs(space).size() << " pairs\n";
  });
  std::size_t cap = 1000000;
  auto* se = space_cmd->add_subcommand("enumerate", "list valid configurations in lexicographic order");
  se->add_option("file", space_pos, "space JSON (defaults to --space)");
  add_space(se);
  se->add_option("--cap", cap, "maximum number of configurations")->capture_default_str();
  add_out(se);
  bind(se, [&] {
    const auto space = load_space(space_pos.empty() ? common.space : space_pos);
    const auto configs = enumerate_valid(space, cap);
    if (configs.empty()) return;
    Output out(common.out);
    write_pool_csv(out.stream(), space, configs);
  });

  // pool
  auto* pool_cmd = app.add_subcommand("pool", "pairwise-covering experiment pools")->require_subcommand(1);
  std::size_t batch = 64;
  std::size_t max_rounds = 10000;
  std::string pool_path;
  bool serial = false;
  auto* pg = pool_cmd->add_subcommand("generate", "greedy constrained pairwise-covering pool");
  add_space(pg);
  add_seed(pg);
  pg->add_option("--batch", batch, "candidates per round")->capture_default_str();
  pg->add_option("--max-rounds", max_rounds, "round limit")->capture_default_str();
  pg->add_flag("--serial", serial, "use the serial reference kernels");
  add_out(pg);
  bind(pg, [&] {
    const auto space = load_space(common.space);
    PoolParams params;
    params.batch_size = batch;
    params.max_rounds = max_rounds;
    params.seed = common.seed;
    const auto res = generate_pool(space, params, serial ? kernels::Exec::Serial : kernels::Exec::Parallel);
    {
      Output out(common.out);
      write_pool_csv(out.stream(), space, res.pool);
    }
    const auto total = res.covered + res.uncovered_pairs.size();
    std::cerr << "pool size " << res.pool.size() << ", covered " << res.covered << "/" << total << " pairs in "
              << res.rounds_used << " rounds\n";
    auto m = make_manifest(pg, common.seed);
    finish_manifest(m, common.out, {common.space});
  });
  auto* pr = pool_cmd->add_subcommand("report", "coverage of an existing pool");
  add_space(pr);
  pr->add_option("--pool", pool_path, "pool CSV")->required();
  add_out(pr);
  bind(pr, [&] {
    const auto space = load_space(common.space);
    const auto entries = load_pool(pool_path, space);
    std::vector<Configuration> configs;
    std::size_t invalid = 0;
    for (const auto& e : entries) {
      if (!space.is_valid(e.config)) ++invalid;
      configs.push_back(e.config);
    }
    const auto rep = coverage_report(space, configs);
    Output out(common.out);
    auto& os = out.stream();
    os << "configs," << configs.size() << '\n';
    os << "invalid_configs," << invalid << '\n';
    os << "covered," << rep.covered << '\n';
    os << "total," << rep.total << '\n';
    os << "coverage," << fmt(rep.fraction) << '\n';
    for (const auto& p : rep.uncovered) os << "uncovered," << describe_pair(space, p) << '\n';
  });

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "performance corpora")->require_subcommand(1);
  std::string corpus_path, metric = "mse", grouping = "dataset-horizon";
  auto* cv = corpus_cmd->add_subcommand("validate", "check a corpus file");
  cv->add_option("--corpus", corpus_path, "corpus CSV")->required();
  bind(cv, [&] {
    const auto c = load_corpus(corpus_path);
    std::cout << c.size() << " records, " << c.dataset_count() << " datasets, " << c.config_count()
              << " configs, metrics " << csv::join(c.metric_columns()) << '\n';
  });
  auto add_view_cmd = [&](const char* name, const char* help, bool rank) {
    auto* cmd = corpus_cmd->add_subcommand(name, help);
    cmd->add_option("--corpus", corpus_path, "corpus CSV")->required();
    cmd->add_option("--metric", metric, "metric column")->capture_default_str();
    cmd->add_option("--group", grouping, "dataset-horizon or dataset")->capture_default_str();
    add_out(cmd);
    bind(cmd, [&, cmd, rank] {
      const auto c = load_corpus(corpus_path);
      const auto g = parse_grouping(grouping);
      const auto view = rank ? rank_normalize(c, metric, g) : standardize(c, metric, g);
      print_warnings(view.warnings);
      {
        Output out(common.out);
        write_view_csv(out.stream(), view);
      }
      auto m = make_manifest(cmd, 0);
      finish_manifest(m, common.out, {corpus_path});
    });
  };
  add_view_cmd("rank", "normalized ranks within groups", true);
  add_view_cmd("standardize", "z-scores within groups", false);

  // analyze
  auto* an = app.add_subcommand("analyze", "statistical battery over a corpus joined with its pool")
                 ->require_subcommand(1);
  auto add_analyze = [&](const char* name, const char* help) {
    auto* cmd = an->add_subcommand(name, help);
    add_space(cmd);
    cmd->add_option("--corpus", aargs.corpus, "corpus CSV")->required();
    cmd->add_option("--pool", aargs.pool, "pool CSV")->required();
    cmd->add_option("--metric", aargs.metric, "metric column")->capture_default_str();
    cmd->add_option("--target", aargs.target, "standardized or rank")->capture_default_str();
    cmd->add_option("--group", aargs.group, "dataset-horizon or dataset")->capture_default_str();
    cmd->add_option("--controls", aargs.controls, "both, dataset, horizon or none")->capture_default_str();
    add_out(cmd);
    return cmd;
  };
  auto analyze_done = [&](CLI::App* cmd) {
    auto m = make_manifest(cmd, 0);
    m.deviations.push_back(kFixedEffectsBanner);
    finish_manifest(m, common.out, {common.space, aargs.corpus, aargs.pool});
  };

  auto* ae = add_analyze("effects", "per-component coefficients");
  bind(ae, [&] {
    const auto space = load_space(common.space);
    const auto rep = main_effects(load_joined(aargs, space), space, parse_controls(aargs.controls));
    print_warnings(rep.warnings);
    {
      Output out(common.out);
      auto& os = out.stream();
      write_banner(os);
      os << "dimension,component,baseline,estimable,coef,se,t,p\n";
      for (const auto& c : rep.components) {
        const auto& D = space.dimension(c.dimension);
        os << D.id << ',' << D.components[c.component] << ',' << c.baseline << ',' << c.estimable << ','
           << fmt(c.coef) << ',' << fmt(c.se) << ',' << fmt(c.t) << ',' << fmt(c.p) << '\n';
      }
    }
    analyze_done(ae);
  });
  auto write_anova = [&](std::ostream& os, const EffectReport& rep, const DesignSpace& space) {
    write_banner(os);
    os << "dimension,stage,included,df,ss,share,f,p\n";
    for (const auto& d : rep.dimensions) {
      const auto& D = space.dimension(d.dimension);
      os << D.id << ',' << to_string(D.stage) << ',' << d.included << ',' << d.df << ',' << fmt(d.ss) << ','
         << fmt(d.share) << ',' << fmt(d.f) << ',' << fmt(d.p) << '\n';
    }
  };
  auto* aa = add_analyze("anova", "per-dimension variance shares");
  bind(aa, [&] {
    const auto space = load_space(common.space);
    const auto rep = main_effects(load_joined(aargs, space), space, parse_controls(aargs.controls));
    print_warnings(rep.warnings);
    {
      Output out(common.out);
      write_anova(out.stream(), rep, space);
    }
    analyze_done(aa);
  });
  auto* as = add_analyze("stages", "variance shares summed per pipeline stage");
  bind(as, [&] {
    const auto space = load_space(common.space);
    const auto rep = main_effects(load_joined(aargs, space), space, parse_controls(aargs.controls));
    print_warnings(rep.warnings);
    const auto totals = stage_shares(rep, space);
    {
      Output out(common.out);
      auto& os = out.stream();
      write_banner(os);
      os << "stage,share\n";
      for (std::size_t s = 0; s < kStageCount; ++s) os << to_string(static_cast<Stage>(s)) << ',' << fmt(totals[s]) << '\n';
    }
    analyze_done(as);
  });
  std::string dim_a, dim_b;
  auto* ai = add_analyze("interactions", "mean score per component pair of two dimensions");
  ai->add_option("--dim-a", dim_a, "first dimension id")->required();
  ai->add_option("--dim-b", dim_b, "second dimension id")->required();
  bind(ai, [&] {
    const auto space = load_space(common.space);
    const auto a = require_dimension(space, dim_a);
    const auto b = require_dimension(space, dim_b);
    const auto im = interaction_means(load_joined(aargs, space), space, a, b);
    {
      Output out(common.out);
      auto& os = out.stream();
      write_banner(os);
      os << dim_a << ',' << dim_b << ",mean,support\n";
      for (std::size_t i = 0; i < im.mean.size(); ++i)
        for (std::size_t j = 0; j < im.mean[i].size(); ++j)
          os << space.dimension(a).components[i] << ',' << space.dimension(b).components[j] << ','
             << (im.support[i][j] ? fmt(im.mean[i][j]) : std::string()) << ',' << im.support[i][j] << '\n';
    }
    analyze_done(ai);
  });
  double alpha = 0.05;
  auto* ap = add_analyze("pairwise", "partial eta squared of every dimension-pair interaction");
  ap->add_option("--alpha", alpha, "FDR level")->capture_default_str();
  bind(ap, [&] {
    const auto space = load_space(common.space);
    const auto res = pairwise_interaction_eta(load_joined(aargs, space), space, parse_controls(aargs.controls), alpha);
    {
      Output out(common.out);
      auto& os = out.stream();
      write_banner(os);
      os << "dim_a,dim_b,estimable,df,ss,eta2,f,p,p_adjusted,significant\n";
      for (const auto& r : res) {
        os << space.dimension(r.dim_a).id << ',' << space.dimension(r.dim_b).id << ',' << r.estimable << ',' << r.df
           << ',' << fmt(r.ss) << ',' << fmt(r.eta2) << ',' << fmt(r.f) << ',' << fmt(r.p) << ','
           << fmt(r.p_adjusted) << ',' << r.significant << '\n';
      }
    }
    analyze_done(ap);
  });
  std::string characteristic;
  std::size_t top_j = 3;
  bool welch = false;
  auto* ac = add_analyze("cohens", "component mean differences between high and low characteristic datasets");
  ac->add_option("--characteristic", characteristic, "CSV dataset,value")->required();
  ac->add_option("--top", top_j, "datasets per side")->capture_default_str();
  ac->add_flag("--welch", welch, "Welch t-test instead of the pooled-variance test");
  bind(ac, [&] {
    const auto space = load_space(common.space);
    std::map<std::string, double> values;
    {
      std::ifstream in(characteristic);
      if (!in) throw SchemaError("cannot open " + characteristic);
      std::string line;
      if (!csv::next_record(in, line) || csv::split(line) != std::vector<std::string>{"dataset", "value"})
        throw SchemaError("characteristic header must be dataset,value");
      while (csv::next_record(in, line)) {
        const auto cells = csv::split(line);
        const auto v = cells.size() == 2 ? csv::parse_double(cells[1]) : std::nullopt;
        if (!v) throw SchemaError("bad characteristic row '" + line + "'");
        values[cells[0]] = *v;
      }
    }
    const auto split = characteristic_split(values, top_j);
    const auto diffs = component_mean_diffs(load_joined(aargs, space), space, split,
                                            welch ? stats::TTest::Welch : stats::TTest::EqualVariance);
    {
      Output out(common.out);
      auto& os = out.stream();
      write_banner(os);
      os << "# high: " << csv::join(split.hi) << "; low: " << csv::join(split.lo) << '\n';
      os << "dimension,component,n_hi,n_lo,diff,d,t,p\n";
      for (const auto& r : diffs) {
        const auto& D = space.dimension(r.dimension);
        os << D.id << ',' << D.components[r.component] << ',' << r.n_hi << ',' << r.n_lo << ','
           << fmt(r.result.diff) << ',' << fmt(r.result.d) << ',' << fmt(r.result.t) << ',' << fmt(r.result.p)
           << '\n';
      }
    }
    analyze_done(ac);
  });
  auto* at = an->add_subcommand("ptv", "performance-to-volatility ratio per config");
  at->add_option("--corpus", aargs.corpus, "corpus CSV")->required();
  at->add_option("--metric", aargs.metric, "metric column")->capture_default_str();
  at->add_option("--group", aargs.group, "dataset-horizon or dataset")->capture_default_str();
  add_out(at);
  bind(at, [&] {
    const auto view = rank_normalize(load_corpus(aargs.corpus), aargs.metric, parse_grouping(aargs.group));
    print_warnings(view.warnings);
    {
      Output out(common.out);
      auto& os = out.stream();
      os << "config_id,scenarios,mu,sigma,ratio,infinite\n";
      for (const auto& e : ptv_ratio(view)) {
        os << e.config_id << ',' << e.scenarios << ',' << fmt(e.mu) << ',' << fmt(e.sigma) << ',' << fmt(e.ratio)
           << ',' << e.infinite << '\n';
      }
    }
    auto m = make_manifest(at, 0);
    finish_manifest(m, common.out, {aargs.corpus});
  });

  // meta
  auto* meta_cmd = app.add_subcommand("meta", "meta-features and the configuration recommender")
                       ->require_subcommand(1);
  std::vector<std::string> series_specs;
  auto* mf = meta_cmd->add_subcommand("features", "fallback statistical meta-features");
  mf->add_option("--series", series_specs, "ID=PATH of a series CSV (repeatable)")->required();
  add_out(mf);
  bind(mf, [&] {
    std::vector<MetaFeatureVector> vecs;
    std::vector<std::string> inputs;
    for (const auto& spec : series_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--series expects ID=PATH, got " + spec);
      const auto id = spec.substr(0, eq);
      const auto path = spec.substr(eq + 1);
      vecs.push_back(fallback_features(load_series(path, id)));
      inputs.push_back(path);
    }
    {
      Output out(common.out);
      write_embeddings(out.stream(), vecs);
    }
    auto m = make_manifest(mf, 0);
    m.deviations.push_back("meta-features come from the statistical fallback, not a pretrained encoder");
    finish_manifest(m, common.out, inputs);
  });
  std::string series_path;
  ProxyParams proxy;
  auto* mp = meta_cmd->add_subcommand("proxy", "proxy classification table of one series");
  mp->add_option("--series", series_path, "series CSV")->required();
  mp->add_option("--L", proxy.L, "window length")->capture_default_str();
  mp->add_option("--K", proxy.K, "label bins")->capture_default_str();
  mp->add_option("--M", proxy.M, "sampled rows")->capture_default_str();
  mp->add_flag("--exhaustive", proxy.exhaustive, "emit every (channel, t) instead of sampling");
  add_seed(mp);
  add_out(mp);
  bind(mp, [&] {
    proxy.seed = common.seed;
    const auto table = build_proxy(load_series(series_path, fs::path(series_path).stem().string()), proxy);
    print_warnings(table.warnings);
    {
      Output out(common.out);
      write_proxy_csv(out.stream(), table);
    }
    auto m = make_manifest(mp, common.seed);
    finish_manifest(m, common.out, {series_path});
  });

  std::string meta_path, model_path, history_path;
  MetaHyper hyper;
  TrainConfig tcfg;
  auto* mt = meta_cmd->add_subcommand("train", "fit the recommender on a corpus");
  add_space(mt);
  add_seed(mt);
  mt->add_option("--corpus", corpus_path, "corpus CSV")->required();
  mt->add_option("--pool", pool_path, "pool CSV")->required();
  mt->add_option("--meta", meta_path, "embedding CSV")->required();
  mt->add_option("--metric", metric, "metric column")->capture_default_str();
  mt->add_option("--embed-dim", hyper.e, "codebook width")->capture_default_str();
  mt->add_option("--hidden", hyper.h, "hidden units")->capture_default_str();
  mt->add_option("--lr", tcfg.lr, "learning rate")->capture_default_str();
  mt->add_option("--epochs", tcfg.epochs, "maximum epochs")->capture_default_str();
  mt->add_option("--patience", tcfg.patience, "early-stop patience")->capture_default_str();
  mt->add_option("--val-fraction", tcfg.val_fraction, "validation share of datasets")->capture_default_str();
  mt->add_option("--history", history_path, "per-epoch CSV");
  add_out(mt);
  bind(mt, [&] {
    const auto space = load_space(common.space);
    const auto corpus = load_corpus(corpus_path);
    const auto view = rank_normalize(corpus, metric, Grouping::DatasetHorizon);
    print_warnings(view.warnings);
    const auto pool = load_pool(pool_path, space);
    const auto joined = join(view, pool, space);
    const auto metas = meta_by_dataset(meta_path);
    std::vector<MetaExample> examples;
    for (const auto& r : joined.rows) {
      const auto it = metas.find(r.dataset_id);
      if (it == metas.end()) throw SchemaError("no meta-features for dataset " + r.dataset_id);
      examples.push_back({r.dataset_id, r.dataset_id + "/" + std::to_string(r.horizon), it->second, r.config, r.y});
    }
    if (examples.empty()) throw InsufficientError("corpus has no usable records");
    hyper.seed = common.seed;
    tcfg.seed = common.seed;
    const auto init = init_model(space, examples.front().meta.size(), hyper);
    const auto res = train(init, examples, tcfg);
    if (common.out == "-") throw std::invalid_argument("meta train needs --out");
    save_model(res.model, common.out);
    if (!history_path.empty()) {
      Output h(history_path);
      h.stream() << "epoch,train_loss,val_spearman\n";
      for (const auto& e : res.history)
        h.stream() << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_spearman) << '\n';
    }
    std::cerr << "trained " << res.history.size() << " epochs, best epoch " << res.best_epoch << '\n';
    auto m = make_manifest(mt, common.seed);
    finish_manifest(m, common.out, {common.space, corpus_path, pool_path, meta_path});
  });

  std::string candidates_path, dataset_filter;
  std::size_t top = 5;
  auto* mr = meta_cmd->add_subcommand("recommend", "rank candidate configurations for unseen datasets");
  add_space(mr);
  mr->add_option("--model", model_path, "checkpoint JSON")->required();
  mr->add_option("--meta", meta_path, "embedding CSV")->required();
  mr->add_option("--candidates", candidates_path, "pool CSV of candidates")->required();
  mr->add_option("--dataset", dataset_filter, "only this dataset id");
  mr->add_option("--top", top, "configurations per dataset")->capture_default_str();
  add_out(mr);
  bind(mr, [&] {
    const auto space = load_space(common.space);
    const auto model = load_model(model_path, space);
    const auto pool = load_pool(candidates_path, space);
    std::vector<Configuration> configs;
    for (const auto& e : pool) configs.push_back(e.config);
    const auto metas = meta_by_dataset(meta_path);
    if (!dataset_filter.empty() && !metas.contains(dataset_filter)) {
      throw SchemaError("no embedding row for dataset '" + dataset_filter + "'");
    }
    {
      Output out(common.out);
      auto& os = out.stream();
      os << "dataset_id,rank,config_id,score\n";
      for (const auto& [id, meta] : metas) {
        if (!dataset_filter.empty() && id != dataset_filter) continue;
        const auto recs = recommend(model, meta, configs, top);
        for (std::size_t i = 0; i < recs.size(); ++i)
          os << id << ',' << i + 1 << ',' << pool[recs[i].index].config_id << ',' << fmt(recs[i].score) << '\n';
      }
    }
    auto m = make_manifest(mr, 0);
    finish_manifest(m, common.out, {common.space, model_path, meta_path, candidates_path});
  });

  auto* mv = meta_cmd->add_subcommand("eval", "selection quality of top-k picks on a held-out corpus");
  add_space(mv);
  mv->add_option("--model", model_path, "checkpoint JSON")->required();
  mv->add_option("--meta", meta_path, "embedding CSV")->required();
  mv->add_option("--corpus", corpus_path, "held-out corpus CSV")->required();
  mv->add_option("--pool", pool_path, "pool CSV")->required();
  mv->add_option("--metric", metric, "metric column")->capture_default_str();
  mv->add_option("--top", top, "picks per dataset and horizon")->capture_default_str();
  add_out(mv);
  bind(mv, [&] {
    const auto space = load_space(common.space);
    const auto model = load_model(model_path, space);
    const auto view = rank_normalize(load_corpus(corpus_path), metric, Grouping::DatasetHorizon);
    print_warnings(view.warnings);
    const auto joined = join(view, load_pool(pool_path, space), space);
    const auto metas = meta_by_dataset(meta_path);
    std::map<std::pair<std::string, int>, std::vector<const JoinedRow*>> groups;
    for (const auto& r : joined.rows) groups[{r.dataset_id, r.horizon}].push_back(&r);
    std::vector<double> picked;
    std::size_t hits = 0;
    for (const auto& [key, rows] : groups) {
      const auto it = metas.find(key.first);
      if (it == metas.end()) throw SchemaError("no meta-features for dataset " + key.first);
      std::vector<Configuration> configs;
      double best = 2.0;
      for (const auto* r : rows) {
        configs.push_back(r->config);
        best = std::min(best, r->y);
      }
      const auto recs = recommend(model, it->second, configs, top);
      for (const auto& rec : recs) picked.push_back(rows[rec.index]->y);
      if (rows[recs.front().index]->y == best) ++hits;
    }
    const auto q = selection_quality(picked);
    {
      Output out(common.out);
      auto& os = out.stream();
      os << "metric,value\n";
      os << "groups," << groups.size() << '\n';
      os << "picks," << q.picks << '\n';
      os << "top_quartile," << fmt(q.top_quartile) << '\n';
      os << "top_half," << fmt(q.top_half) << '\n';
      os << "top1_hit_rate," << fmt(groups.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(groups.size()))
         << '\n';
      for (std::size_t b = 0; b < q.histogram.size(); ++b) os << "hist_" << b << ',' << q.histogram[b] << '\n';
    }
    auto m = make_manifest(mv, 0);
    finish_manifest(m, common.out, {common.space, model_path, meta_path, corpus_path, pool_path});
  });

  // synth
  auto* synth = app.add_subcommand("synth", "synthetic corpora with planted structure")->require_subcommand(1);
  PlantedParams planted;
  std::string out_dir;
  auto* sm = synth->add_subcommand("meta", "planted meta-corpus: space, pool, train/test corpora, embeddings");
  add_seed(sm);
  sm->add_option("--train", planted.train_datasets, "training datasets")->capture_default_str();
  sm->add_option("--test", planted.test_datasets, "held-out datasets")->capture_default_str();
  sm->add_option("--meta-dim", planted.meta_dim, "meta-feature width")->capture_default_str();
  sm->add_option("--out-dir", out_dir, "output directory")->required();
  bind(sm, [&] {
    planted.seed = common.seed;
    const auto corpus = make_planted_corpus(planted);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    {
      Output o((dir / "space.json").string());
      o.stream() << corpus.space.to_json().dump(2) << '\n';
    }
    {
      Output o((dir / "pool.csv").string());
      write_pool_csv(o.stream(), corpus.space, corpus.configs);
    }
    {
      Output o((dir / "train_corpus.csv").string());
      write_corpus_csv(o.stream(), planted_performance(corpus, corpus.train));
    }
    {
      Output o((dir / "test_corpus.csv").string());
      write_corpus_csv(o.stream(), planted_performance(corpus, corpus.test));
    }
    {
      auto all = planted_embeddings(corpus.train);
      const auto test = planted_embeddings(corpus.test);
      all.insert(all.end(), test.begin(), test.end());
      Output o((dir / "embeddings.csv").string());
      write_embeddings(o.stream(), all);
    }
    auto m = make_manifest(sm, common.seed);
    finish_manifest(m, (dir / "synth").string(), {});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (threads > 0) kernels::set_threads(threads);
  if (!action) return 0;
  try {
    action();
  } catch (const compforge::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
