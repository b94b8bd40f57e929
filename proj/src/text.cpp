#include "anchorrank/text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "anchorrank/rng.hpp"

namespace anchorrank {

namespace {

constexpr const char* kStopwords[] = {"a",  "an", "and", "are",  "as",    "at",    "be",   "but",  "by",    "for",
                                      "from", "has", "he", "in",  "is",    "it",    "its",  "not",  "of",    "on",
                                      "or", "that", "the", "this", "to",   "was",   "were", "which", "will", "with"};

bool is_consonant(char c) { return c != 'a' && c != 'e' && c != 'i' && c != 'o' && c != 'u' && std::isalpha(static_cast<unsigned char>(c)); }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::set<std::string, std::less<>> default_stopwords() {
  return {std::begin(kStopwords), std::end(kStopwords)};
}

std::set<std::string, std::less<>> load_stopwords(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::set<std::string, std::less<>> words;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    for (auto& c : line) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(line);
  }
  return words;
}

std::string strip_suffix(std::string_view word) {
  constexpr std::size_t kMinStem = 3;
  std::string stem(word);
  bool verbal = false;
  if (ends_with(stem, "ing") && stem.size() - 3 >= kMinStem) {
    stem.resize(stem.size() - 3);
    verbal = true;
  } else if (ends_with(stem, "ed") && stem.size() - 2 >= kMinStem) {
    stem.resize(stem.size() - 2);
    verbal = true;
  } else if (ends_with(stem, "s") && !ends_with(stem, "ss") && stem.size() - 1 >= kMinStem) {
    stem.resize(stem.size() - 1);
  }
  if (verbal && stem.size() > kMinStem) {
    const char last = stem.back();
    if (last == stem[stem.size() - 2] && is_consonant(last) && last != 'l' && last != 's' && last != 'z')
      stem.pop_back();
  }
  return stem;
}

std::vector<std::string> normalize(std::string_view text, const NormConfig& cfg) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (!cfg.stopwords.contains(cur)) {
      out.push_back(cfg.stemmer == Stemmer::suffix ? strip_suffix(cur) : cur);
    }
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  if (cfg.max_tokens > 0 && out.size() > cfg.max_tokens) out.resize(cfg.max_tokens);
  return out;
}

Vocabulary::Vocabulary() : terms_{"<pad>", "<unk>"} {}

int Vocabulary::add(std::string_view term) {
  if (auto it = ids_.find(std::string(term)); it != ids_.end()) return it->second;
  const int id = static_cast<int>(terms_.size());
  terms_.emplace_back(term);
  ids_.emplace(terms_.back(), id);
  return id;
}

int Vocabulary::lookup(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  return it == ids_.end() ? kUnk : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  auto out = open_output(path);
  for (std::size_t i = 2; i < terms_.size(); ++i) out << terms_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (!line.empty()) v.add(line);
  }
  return v;
}

TokenSeq tokenize(std::string_view text, const NormConfig& cfg, const Vocabulary& vocab, std::string source_id) {
  TokenSeq seq;
  seq.source_id = std::move(source_id);
  for (const auto& term : normalize(text, cfg)) seq.tokens.push_back(vocab.lookup(term));
  return seq;
}

Tensor random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  Tensor table({vocab.size(), dim});
  Rng rng(seed);
  for (std::size_t r = 1; r < vocab.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) table.at(r, c) = rng.uniform(-0.1, 0.1);
  return table;
}

Tensor load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                       std::uint64_t seed) {
  Tensor table = random_embeddings(vocab, dim, seed);
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string term;
    fields >> term;
    std::vector<double> values;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
      }
    }
    if (values.size() != dim)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                        " values, found " + std::to_string(values.size()));
    const int id = vocab.lookup(term);
    if (id == Vocabulary::kUnk && term != "<unk>") continue;
    for (std::size_t c = 0; c < dim; ++c) table.at(static_cast<std::size_t>(id), c) = values[c];
  }
  for (std::size_t c = 0; c < dim; ++c) table.at(0, c) = 0.0;
  return table;
}

Tensor embedding_table(const WordVectors& vectors, const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  Tensor table = random_embeddings(vocab, dim, seed);
  for (const auto& [term, values] : vectors) {
    if (values.size() != dim)
      throw std::invalid_argument("embedding for '" + term + "' has " + std::to_string(values.size()) +
                                  " values, expected " + std::to_string(dim));
    const int id = vocab.lookup(term);
    if (id == Vocabulary::kUnk || id == Vocabulary::kPad) continue;
    for (std::size_t c = 0; c < dim; ++c) table.at(static_cast<std::size_t>(id), c) = values[c];
  }
  return table;
}

std::vector<TextRecord> read_text_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<TextRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'id<TAB>text'");
    records.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return records;
}

void write_text_tsv(const std::filesystem::path& path, const std::vector<TextRecord>& records) {
  auto out = open_output(path);
  for (const auto& r : records) out << r.id << '\t' << r.text << '\n';
}

std::vector<AnchorRecord> read_anchor_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<AnchorRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab + 1 == line.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'anchor<TAB>doc_id'");
    records.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return records;
}

void write_anchor_tsv(const std::filesystem::path& path, const std::vector<AnchorRecord>& records) {
  auto out = open_output(path);
  for (const auto& r : records) out << r.text << '\t' << r.linked_doc_id << '\n';
}

}  // namespace anchorrank
