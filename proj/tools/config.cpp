#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace anchorrank::cli {

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys{
      // data
      {"data", "", "directory holding docs.tsv, anchors.tsv, queries.tsv, qrels.txt"},
      {"docs", "", "document TSV (overrides data)"},
      {"anchors", "", "anchor TSV (overrides data)"},
      {"queries", "", "query TSV (overrides data)"},
      {"qrels", "", "TREC qrels (overrides data)"},
      {"embeddings", "", "word vectors, one 'term v1 .. vd' per line"},
      {"stopwords", "", "stopword list; built-in list when empty"},
      {"stemmer", "suffix", "none | suffix"},
      {"out", "out", "output directory"},
      {"seed", "1", "master seed"},
      {"mode", "reinfoselect", "reinfoselect | all_anchor | discriminator"},
      {"threshold", "0.5", "discriminator-select keep threshold"},
      {"only_folds", "", "comma-separated fold indices to train (all when empty)"},
      {"fold", "0", "fold used by warmup"},
      // model
      {"dim", "300", "embedding width (synth writes vectors of this width)"},
      {"ranker_filters", "128", "ranker n-gram filters"},
      {"state_filters", "50", "policy CNN filters per window"},
      {"interaction_filters", "128", "policy interaction n-gram filters"},
      {"feature_scale", "0.01", "multiplier on kernel features"},
      // training
      {"episode_batches", "4", "batches per episode (T)"},
      {"discount", "0.99", "return discount"},
      {"policy_lr", "1e-3", "policy learning rate"},
      {"ranker_lr", "1e-3", "ranker learning rate"},
      {"batch_size", "16", "anchor pairs per batch"},
      {"negatives", "1", "pseudo-negatives per anchor"},
      {"reward_cutoff", "20", "NDCG cutoff for reward and evaluation"},
      {"pool_depth", "20", "BM25 candidates per validation query"},
      {"patience", "3", "episodes without improvement before stopping"},
      {"max_episodes", "50", "episode cap per fold"},
      {"steps_per_batch", "1", "ranker steps per selected batch"},
      {"warmup_epochs", "5", "discriminator warm-up epochs"},
      {"warmup_lr", "1e-3", "warm-up learning rate"},
      {"warmup_positives_per_query", "5", "judged documents per query used as warm-up positives"},
      {"folds", "5", "cross-validation folds"},
      {"per_step_returns", "false", "weight decisions by their own step return"},
      // synth
      {"topics", "5", "synthetic topics"},
      {"docs_per_topic", "400", "synthetic documents per topic"},
      {"vocab_size", "1000", "synthetic vocabulary"},
      {"num_anchors", "200", "synthetic anchors"},
      {"num_queries", "50", "synthetic labeled queries"},
      {"noise_rate", "0.4", "fraction of anchors linked off-topic"},
      {"doc_min_length", "20", "shortest synthetic document"},
      {"doc_max_length", "40", "longest synthetic document"},
      {"topic_share", "0.4", "topic-token share of a synthetic document"},
      // eval / curves / agreement
      {"train_dir", "", "output directory of a train run"},
      {"run", "", "TREC run to evaluate"},
      {"baseline_run", "", "TREC run used as the significance baseline"},
      {"baseline", "", "system name the p-values refer to"},
      {"resamples", "10000", "permutation test resamples"},
      {"restarts", "5", "coordinate ascent random restarts"},
      {"trace", "", "trace CSV for curves"},
      {"decisions_a", "", "first decision log"},
      {"decisions_b", "", "second decision log"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = k.fallback;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  it->second = value;
}

bool Config::has(const std::string& key) const { return !str(key).empty(); }

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double Config::num(const std::string& key) const {
  const std::string& s = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
}

std::uint64_t Config::u64(const std::string& key) const {
  const std::string& s = str(key);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + s + "'");
  return v;
}

std::size_t Config::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

bool Config::flag(const std::string& key) const {
  const std::string& s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
}

std::vector<std::size_t> Config::count_list(const std::string& key) const {
  std::vector<std::size_t> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size())
      throw ConfigError("key '" + key + "': bad entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

TrainConfig Config::train() const {
  TrainConfig t;
  t.episode_batches = count("episode_batches");
  t.discount = num("discount");
  t.policy_lr = num("policy_lr");
  t.ranker_lr = num("ranker_lr");
  t.batch_size = count("batch_size");
  t.negatives = count("negatives");
  t.reward_cutoff = count("reward_cutoff");
  t.pool_depth = count("pool_depth");
  t.patience = count("patience");
  t.max_episodes = count("max_episodes");
  t.steps_per_batch = count("steps_per_batch");
  t.warmup_epochs = count("warmup_epochs");
  t.warmup_lr = num("warmup_lr");
  t.warmup_positives_per_query = count("warmup_positives_per_query");
  t.folds = count("folds");
  t.per_step_returns = flag("per_step_returns");
  t.seed = u64("seed");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return t;
}

ModelConfig Config::model() const {
  ModelConfig m;
  m.dim = count("dim");
  m.ranker_filters = count("ranker_filters");
  m.state_filters = count("state_filters");
  m.interaction_filters = count("interaction_filters");
  m.feature_scale = num("feature_scale");
  if (has("embeddings"))
    m.embeddings = str("embeddings");
  else if (has("data") && std::filesystem::exists(std::filesystem::path(str("data")) / "embeddings.txt"))
    m.embeddings = std::filesystem::path(str("data")) / "embeddings.txt";
  if (m.dim == 0 || m.ranker_filters == 0 || m.state_filters == 0 || m.interaction_filters == 0)
    throw ConfigError("dim and filter counts must be positive");
  if (!(m.feature_scale > 0.0)) throw ConfigError("feature_scale must be positive");
  return m;
}

SynthSpec Config::synth() const {
  SynthSpec s;
  s.topics = count("topics");
  s.docs_per_topic = count("docs_per_topic");
  s.vocab_size = count("vocab_size");
  s.anchors = count("num_anchors");
  s.queries = count("num_queries");
  s.noise_rate = num("noise_rate");
  s.doc_min_length = count("doc_min_length");
  s.doc_max_length = count("doc_max_length");
  s.topic_share = num("topic_share");
  s.embedding_dim = count("dim");
  s.seed = u64("seed");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

NormConfig Config::norm() const {
  NormConfig n;
  n.stopwords = has("stopwords") ? load_stopwords(str("stopwords")) : default_stopwords();
  const std::string& st = str("stemmer");
  if (st == "suffix")
    n.stemmer = Stemmer::suffix;
  else if (st == "none")
    n.stemmer = Stemmer::none;
  else
    throw ConfigError("key 'stemmer': expected none or suffix, got '" + st + "'");
  return n;
}

DatasetPaths Config::paths() const {
  DatasetPaths p;
  if (has("data")) p = paths_in(str("data"));
  if (has("docs")) p.docs = str("docs");
  if (has("anchors")) p.anchors = str("anchors");
  if (has("queries")) p.queries = str("queries");
  if (has("qrels")) p.qrels = str("qrels");
  if (has("embeddings")) p.embeddings = str("embeddings");
  for (const auto* f : {&p.docs, &p.anchors, &p.queries, &p.qrels}) {
    if (f->empty()) throw ConfigError("dataset paths missing: set data or docs/anchors/queries/qrels");
    if (!std::filesystem::exists(*f)) throw ConfigError("no such file: " + f->string());
  }
  if (!p.embeddings.empty() && !std::filesystem::exists(p.embeddings))
    throw ConfigError("no such file: " + p.embeddings.string());
  return p;
}

TrainMode Config::mode() const {
  try {
    return parse_mode(str("mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string Config::dump() const {
  std::string s;
  for (const auto& k : config_keys()) s += k.name + " = " + values_.at(k.name) + "\n";
  return s;
}

}  // namespace anchorrank::cli
