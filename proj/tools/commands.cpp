#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anchorrank/bm25.hpp"
#include "anchorrank/fusion.hpp"
#include "anchorrank/metrics.hpp"

namespace anchorrank::cli {

namespace {

namespace fs = std::filesystem;

std::string fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

fs::path output_dir(const Config& cfg) {
  if (!cfg.has("out")) throw ConfigError("key 'out' must name an output directory");
  const fs::path out = cfg.str("out");
  fs::create_directories(out);
  return out;
}

Dataset dataset(const Config& cfg) { return load_dataset(cfg.paths(), cfg.norm()); }

void cmd_synth(const Config& cfg, std::ostream& log) {
  const SynthSpec spec = cfg.synth();
  const fs::path out = output_dir(cfg);
  const SynthCorpus corpus = generate_synth(spec);
  write_synth(out, corpus);
  const Dataset back = load_dataset(paths_in(out), cfg.norm());
  log << "synth: " << corpus.docs.size() << " docs, " << corpus.anchors.size() << " anchors ("
      << std::count(corpus.anchor_noisy.begin(), corpus.anchor_noisy.end(), true) << " off-topic), "
      << back.labeled_query_ids().size() << " labeled queries -> " << out.string() << "\n";
}

void cmd_index(const Config& cfg, std::ostream& log) {
  const Dataset ds = dataset(cfg);
  const fs::path out = output_dir(cfg);
  ds.index.save(out / "index.bin");
  ds.vocab.save(out / "vocab.txt");
  if (!(InvertedIndex::load(out / "index.bin") == ds.index)) throw std::runtime_error("index did not read back");
  if (Vocabulary::load(out / "vocab.txt").size() != ds.vocab.size()) throw std::runtime_error("vocab did not read back");
  log << "index: " << ds.index.num_docs() << " docs, avg length " << fixed(ds.index.avg_length()) << ", vocabulary "
      << ds.vocab.size() << ", anchors kept " << ds.anchors.size() << " dropped " << ds.dropped_anchors
      << ", labeled queries " << ds.labeled_query_ids().size() << "\n";
}

void cmd_warmup(const Config& cfg, std::ostream& log) {
  const Dataset ds = dataset(cfg);
  const fs::path out = output_dir(cfg);
  WarmupResult r = warmup_fold(ds, cfg.model(), cfg.train(), cfg.count("fold"), cfg.num("threshold"));
  r.policy.save(out / "policy.ckpt");
  write_decisions(out / "decisions.tsv", r.decisions);
  std::size_t kept = 0;
  for (const auto& d : r.decisions) kept += static_cast<std::size_t>(d.action);
  {
    std::ofstream rep(out / "warmup.tsv", std::ios::binary);
    rep << "key\tvalue\n";
    rep << "accuracy\t" << fixed(r.report.accuracy) << "\n";
    rep << "train_size\t" << r.report.train_size << "\n";
    rep << "heldout_size\t" << r.report.heldout_size << "\n";
    rep << "kept\t" << kept << "\n";
    for (std::size_t e = 0; e < r.report.epoch_losses.size(); ++e)
      rep << "epoch" << e << "_loss\t" << fixed(r.report.epoch_losses[e]) << "\n";
    if (!rep) throw std::runtime_error("write failed: warmup.tsv");
  }
  SelectionPolicy check = r.policy;
  check.load(out / "policy.ckpt");
  if (read_decisions(out / "decisions.tsv").size() != r.decisions.size())
    throw std::runtime_error("decisions did not read back");
  log << "warmup: fold " << cfg.count("fold") << " held-out accuracy " << fixed(r.report.accuracy) << ", keeps " << kept
      << " of " << r.decisions.size() << " anchors at threshold " << cfg.str("threshold") << "\n";
}

void cmd_train(const Config& cfg, std::ostream& log) {
  const Dataset ds = dataset(cfg);
  const fs::path out = output_dir(cfg);
  TrainOptions opt;
  opt.mode = cfg.mode();
  opt.threshold = cfg.num("threshold");
  opt.only_folds = cfg.count_list("only_folds");
  const TrainResult result = full_train(ds, cfg.model(), cfg.train(), opt);
  write_outputs(out, result);
  {
    std::ofstream c(out / "config.txt", std::ios::binary);
    c << cfg.dump();
  }
  if (read_trace(out / "trace.csv").rows.size() != result.trace.rows.size())
    throw std::runtime_error("trace did not read back");
  for (const auto& f : result.folds) {
    const fs::path sub = out / ("fold" + std::to_string(f.fold));
    ConvKnrmRanker r = f.ranker;
    r.load(sub / "ranker.ckpt");
    if (f.policy) {
      SelectionPolicy p = *f.policy;
      p.load(sub / "policy.ckpt");
    }
    read_decisions(sub / "decisions.tsv");
    log << "train[" << to_string(opt.mode) << "] fold " << f.fold << ": " << f.episodes << " episodes, val NDCG@"
        << cfg.str("reward_cutoff") << " " << fixed(f.initial_val_ndcg) << " -> " << fixed(f.final_val_ndcg);
    if (f.warmup) log << ", warm-up accuracy " << fixed(f.warmup->accuracy);
    log << "\n";
  }
  log << "train: mean final val NDCG " << fixed(result.mean_final_val_ndcg()) << ", mean test NDCG "
      << fixed(result.mean_test_ndcg()) << " -> " << out.string() << "\n";
}

std::map<std::size_t, std::vector<std::string>> read_folds(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::map<std::size_t, std::vector<std::string>> folds;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string q;
    std::size_t f = 0;
    if (!(ss >> q >> f)) throw FormatError(path.string() + ": malformed line '" + line + "'");
    folds[f].push_back(q);
  }
  return folds;
}

FeatureTable feature_table(const ConvKnrmRanker& ranker, const ValidationSet& set, const Dataset& ds) {
  FeatureTable table;
  for (std::size_t i = 0; i < set.query_ids.size(); ++i) {
    QueryFeatures qf{set.query_ids[i], set.pools[i], {}};
    for (const auto& doc : set.pools[i]) {
      const Tensor phi = ranker.features(*set.queries[i], ds.doc(doc));
      std::vector<double> row(phi.data(), phi.data() + phi.size());
      row.push_back(bm25_score(*set.queries[i], doc, ds.index));
      qf.rows.push_back(std::move(row));
    }
    table.push_back(std::move(qf));
  }
  return table;
}

std::map<std::string, double> per_query(const Run& run, const RelevanceJudgments& qrels, std::size_t k,
                                        int max_grade, bool err) {
  std::map<std::string, double> out;
  for (const auto& list : run) {
    if (!qrels.has_query(list.query_id)) continue;
    out[list.query_id] = err ? err_at_k(list, qrels, k, max_grade) : ndcg_at_k(list, qrels, k);
  }
  return out;
}

void cmd_eval(const Config& cfg, std::ostream& log) {
  const Dataset ds = dataset(cfg);
  const fs::path out = output_dir(cfg);
  const TrainConfig tcfg = cfg.train();
  const std::size_t k = tcfg.reward_cutoff;
  const int max_grade = std::max(1, ds.qrels.max_grade());

  std::vector<std::pair<std::string, Run>> systems;
  if (cfg.has("train_dir")) {
    const fs::path dir = cfg.str("train_dir");
    const ModelConfig model = cfg.model();
    Run bm25, neural, fused;
    const auto labeled = ds.labeled_query_ids();
    for (const auto& [f, test_q] : read_folds(dir / "folds.tsv")) {
      ConvKnrmRanker ranker(random_embeddings(ds.vocab, model.dim, 0), model.ranker(), 0);  // weights come from the checkpoint
      ranker.load(dir / ("fold" + std::to_string(f)) / "ranker.ckpt");
      const ValidationSet test = build_validation(ds, test_q, tcfg.pool_depth);
      for (std::size_t i = 0; i < test.query_ids.size(); ++i) {
        RankedList list{test.query_ids[i], {}};
        for (const auto& doc : test.pools[i]) list.docs.push_back({doc, bm25_score(*test.queries[i], doc, ds.index)});
        list.sort();
        bm25.push_back(std::move(list));
      }
      for (auto& list : rerank(ranker, test, ds)) neural.push_back(std::move(list));

      std::vector<std::string> train_q;
      for (const auto& q : labeled)
        if (std::find(test_q.begin(), test_q.end(), q) == test_q.end()) train_q.push_back(q);
      const ValidationSet train = build_validation(ds, train_q, tcfg.pool_depth);
      const FeatureTable train_table = feature_table(ranker, train, ds);
      CoordinateAscentConfig ca;
      ca.cutoff = k;
      ca.restarts = cfg.count("restarts");
      std::vector<double> bm25_only(ranker.feature_dim() + 1, 0.0);
      bm25_only.back() = 1.0;
      ca.warm_starts.push_back(bm25_only);
      Rng rng(tcfg.seed * 1000003ULL + f);
      const FusionModel fusion = coordinate_ascent(train_table, train.qrels, ca, rng);
      for (auto& list : fusion.rank(feature_table(ranker, test, ds))) fused.push_back(std::move(list));
      log << "eval: fold " << f << " fusion training NDCG@" << k << " " << fixed(fusion.train_metric) << "\n";
    }
    systems.emplace_back("bm25", std::move(bm25));
    systems.emplace_back("ranker", std::move(neural));
    systems.emplace_back("fusion", std::move(fused));
    for (const auto& [name, run] : systems) {
      write_run(out / (name + ".run"), run, name);
      if (read_run(out / (name + ".run")).size() != run.size()) throw std::runtime_error(name + ".run did not read back");
    }
  }
  if (cfg.has("run")) systems.emplace_back("run", read_run(cfg.str("run")));
  if (cfg.has("baseline_run")) systems.emplace_back("baseline", read_run(cfg.str("baseline_run")));
  if (systems.empty()) throw ConfigError("eval needs train_dir, run or baseline_run");

  std::string baseline = cfg.str("baseline");
  if (baseline.empty()) baseline = cfg.has("baseline_run") ? "baseline" : cfg.has("train_dir") ? "bm25" : "";
  const Run* base_run = nullptr;
  for (const auto& [name, run] : systems)
    if (name == baseline) base_run = &run;
  if (!baseline.empty() && !base_run) throw ConfigError("baseline '" + baseline + "' is not among the systems");

  std::ofstream report(out / "report.tsv", std::ios::binary);
  report << "metric\tsystem\tmean\tp_vs_baseline\n";
  for (const bool err : {false, true}) {
    const std::string metric = (err ? "err@" : "ndcg@") + std::to_string(k);
    std::map<std::string, double> base;
    if (base_run) base = per_query(*base_run, ds.qrels, k, max_grade, err);
    for (const auto& [name, run] : systems) {
      const auto values = per_query(run, ds.qrels, k, max_grade, err);
      double mean = 0.0;
      for (const auto& [q, v] : values) mean += v;
      if (!values.empty()) mean /= static_cast<double>(values.size());
      std::string p = "NA";
      if (base_run) {
        std::vector<double> a, b;
        for (const auto& [q, v] : values)
          if (auto it = base.find(q); it != base.end()) a.push_back(v), b.push_back(it->second);
        if (a.size() >= 2) {
          Rng rng(tcfg.seed);
          p = fixed(permutation_test(a, b, cfg.count("resamples"), rng));
        }
      }
      report << metric << '\t' << name << '\t' << fixed(mean) << '\t' << p << '\n';
      log << metric << '\t' << name << '\t' << fixed(mean) << '\t' << p << '\n';
    }
  }
  report.close();
  if (!report) throw std::runtime_error("write failed: report.tsv");
  std::ifstream check(out / "report.tsv");
  std::string header;
  if (!std::getline(check, header) || header != "metric\tsystem\tmean\tp_vs_baseline")
    throw std::runtime_error("report did not read back");
}

void cmd_curves(const Config& cfg, std::ostream& log) {
  if (!cfg.has("trace")) throw ConfigError("curves needs key 'trace'");
  const TrainTrace trace = read_trace(cfg.str("trace"));
  const fs::path out = output_dir(cfg);
  {
    std::ofstream csv(out / "curves.csv", std::ios::binary);
    csv << "batch,selected_frac,reward\n";
    for (const auto& r : trace.rows) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", r.batch, r.selected_frac, r.reward);
      csv << buf;
    }
    if (!csv) throw std::runtime_error("write failed: curves.csv");
  }
  std::ifstream back(out / "curves.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(back, l);) ++lines;
  if (lines != trace.rows.size() + 1) throw std::runtime_error("curves.csv did not read back");
  log << "curves: " << trace.rows.size() << " batches (mode " << trace.mode << ")\n";
}

void cmd_agreement(const Config& cfg, std::ostream& log) {
  if (!cfg.has("decisions_a") || !cfg.has("decisions_b"))
    throw ConfigError("agreement needs keys 'decisions_a' and 'decisions_b'");
  const double a = agreement(read_decisions(cfg.str("decisions_a")), read_decisions(cfg.str("decisions_b")));
  const fs::path out = output_dir(cfg);
  {
    std::ofstream f(out / "agreement.tsv", std::ios::binary);
    f << "decisions_a\tdecisions_b\tagreement\n" << cfg.str("decisions_a") << '\t' << cfg.str("decisions_b") << '\t'
      << fixed(a) << '\n';
    if (!f) throw std::runtime_error("write failed: agreement.tsv");
  }
  log << "agreement: " << fixed(a) << "\n";
}

}  // namespace

void run_command(const std::string& name, const Config& cfg, std::ostream& log) {
  if (name == "synth") return cmd_synth(cfg, log);
  if (name == "index") return cmd_index(cfg, log);
  if (name == "warmup") return cmd_warmup(cfg, log);
  if (name == "train") return cmd_train(cfg, log);
  if (name == "eval") return cmd_eval(cfg, log);
  if (name == "curves") return cmd_curves(cfg, log);
  if (name == "agreement") return cmd_agreement(cfg, log);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace anchorrank::cli
