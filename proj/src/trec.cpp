#include "anchorrank/trec.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "anchorrank/text.hpp"

namespace anchorrank {

void RelevanceJudgments::set(const std::string& qid, const std::string& docid, int grade) {
  if (grade < 0) throw FormatError("negative grade for " + qid + "/" + docid);
  grades_[qid][docid] = grade;
}

int RelevanceJudgments::grade(const std::string& qid, const std::string& docid) const {
  auto q = grades_.find(qid);
  if (q == grades_.end()) return 0;
  auto d = q->second.find(docid);
  return d == q->second.end() ? 0 : d->second;
}

const std::map<std::string, int>& RelevanceJudgments::for_query(const std::string& qid) const {
  auto q = grades_.find(qid);
  if (q == grades_.end()) throw std::out_of_range("no judgments for query '" + qid + "'");
  return q->second;
}

int RelevanceJudgments::max_grade() const {
  int best = 0;
  for (const auto& [q, docs] : grades_)
    for (const auto& [d, g] : docs) best = std::max(best, g);
  return best;
}

RelevanceJudgments RelevanceJudgments::subset(const std::vector<std::string>& qids) const {
  RelevanceJudgments out;
  for (const auto& q : qids)
    if (auto it = grades_.find(q); it != grades_.end()) out.grades_.insert(*it);
  return out;
}

RelevanceJudgments read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  RelevanceJudgments qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, iter, docid, grade_text, extra;
    if (!(fields >> qid)) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (!(fields >> iter >> docid >> grade_text) || (fields >> extra))
      throw FormatError(where + ": expected 'qid 0 docid grade'");
    int grade = 0;
    try {
      std::size_t used = 0;
      grade = std::stoi(grade_text, &used);
      if (used != grade_text.size()) throw std::invalid_argument(grade_text);
    } catch (const std::exception&) {
      throw FormatError(where + ": grade '" + grade_text + "' is not an integer");
    }
    if (grade < 0) throw FormatError(where + ": negative grade");
    if (qrels.has_query(qid) && qrels.for_query(qid).contains(docid))
      throw FormatError(where + ": duplicate judgment for (" + qid + ", " + docid + ")");
    qrels.set(qid, docid, grade);
  }
  return qrels;
}

void write_qrels(const std::filesystem::path& path, const RelevanceJudgments& qrels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  for (const auto& [q, docs] : qrels.all())
    for (const auto& [d, g] : docs) out << q << " 0 " << d << ' ' << g << '\n';
}

void RankedList::sort() {
  std::stable_sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

void write_run(const std::filesystem::path& path, const Run& run, const std::string& tag) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  char score[64];
  for (const auto& list : run) {
    RankedList sorted = list;
    sorted.sort();
    for (std::size_t r = 0; r < sorted.docs.size(); ++r) {
      std::snprintf(score, sizeof(score), "%.6g", sorted.docs[r].score);
      out << list.query_id << " Q0 " << sorted.docs[r].doc_id << ' ' << (r + 1) << ' ' << score << ' ' << tag << '\n';
    }
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

Run read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Run run;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, q0, docid, tag;
    std::size_t rank = 0;
    std::string score_text;
    if (!(fields >> qid)) continue;
    if (!(fields >> q0 >> docid >> rank >> score_text >> tag))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'qid Q0 docid rank score tag'");
    double score = 0.0;
    try {
      score = std::stod(score_text);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad score '" + score_text + "'");
    }
    if (run.empty() || run.back().query_id != qid) run.push_back({qid, {}});
    run.back().docs.push_back({docid, score});
  }
  return run;
}

}  // namespace anchorrank
