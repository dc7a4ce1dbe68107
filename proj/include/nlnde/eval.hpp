#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlnde/corpus.hpp"

namespace nlnde {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // 0/0 is 0 for all three.
  double precision() const;
  double recall() const;
  double f1() const;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct EvalResult {
  Counts overall;
  std::map<EntityType, Counts> per_type;  // every non-excluded type present

  double precision() const { return overall.precision(); }
  double recall() const { return overall.recall(); }
  double f1() const { return overall.f1(); }
};

// Exact (start, end, type) matching. Documents are paired by id; a document
// missing on one side counts as empty there. Duplicate predictions collapse.
// Throws DataError when spans overlap within one side of a document.
EvalResult entity_f1(const std::vector<DocumentSpans>& gold, const std::vector<DocumentSpans>& pred,
                     const std::set<EntityType>& exclude = {});

// "P / R / F1" as percentages with one decimal.
std::string format_prf(const Counts& c);
// Overall row followed by one row per type.
std::string report(const EvalResult& result);
nlohmann::json report_json(const EvalResult& result);

// Spans per document from a directory of .ann files (paired with .txt) or a
// corpus TSV.
std::vector<DocumentSpans> load_spans(const std::filesystem::path& path);

}  // namespace nlnde
