#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace anchorrank {

/// query_id -> doc_id -> grade. Missing documents have grade 0.
class RelevanceJudgments {
public:
  void set(const std::string& qid, const std::string& docid, int grade);
  int grade(const std::string& qid, const std::string& docid) const;
  bool has_query(const std::string& qid) const { return grades_.contains(qid); }
  const std::map<std::string, int>& for_query(const std::string& qid) const;
  const std::map<std::string, std::map<std::string, int>>& all() const { return grades_; }
  std::size_t num_queries() const { return grades_.size(); }
  int max_grade() const;
  bool empty() const { return grades_.empty(); }

  /// Restricted to the given queries.
  RelevanceJudgments subset(const std::vector<std::string>& qids) const;

  friend bool operator==(const RelevanceJudgments&, const RelevanceJudgments&) = default;

private:
  std::map<std::string, std::map<std::string, int>> grades_;
};

/// "qid 0 docid grade" lines. Duplicate pairs and non-integer grades are errors.
RelevanceJudgments read_qrels(const std::filesystem::path& path);
void write_qrels(const std::filesystem::path& path, const RelevanceJudgments& qrels);

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> docs;

  /// Sorts by descending score, ties by ascending doc_id.
  void sort();
};

using Run = std::vector<RankedList>;

/// "qid Q0 docid rank score tag" lines; scores carry six significant digits.
void write_run(const std::filesystem::path& path, const Run& run, const std::string& tag);
/// Parses a run; lists keep file order, which write_run guarantees is rank order.
Run read_run(const std::filesystem::path& path);

}  // namespace anchorrank
