#include "nlnde/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "nlnde/errors.hpp"

namespace nlnde {

namespace fs = std::filesystem;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

using Key = std::tuple<std::size_t, std::size_t, int>;

std::set<Key> span_set(const std::vector<EntitySpan>& spans, const std::set<EntityType>& exclude,
                       const std::string& doc, const char* side) {
  std::set<Key> keys;
  for (const auto& s : spans) {
    if (exclude.count(s.type)) continue;
    keys.insert({s.start, s.end, static_cast<int>(s.type)});
  }
  // Sorted by start; overlap shows up between neighbours. Identical
  // duplicates were already collapsed by the set.
  std::size_t reach = 0;
  bool first = true;
  for (const auto& [start, end, type] : keys) {
    if (!first && start < reach) {
      throw DataError(std::string(side) + " spans overlap in document '" + doc + "' at offset " +
                      std::to_string(start));
    }
    reach = std::max(reach, end);
    first = false;
  }
  return keys;
}

}  // namespace

double Counts::precision() const { return ratio(tp, tp + fp); }
double Counts::recall() const { return ratio(tp, tp + fn); }
double Counts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

EvalResult entity_f1(const std::vector<DocumentSpans>& gold, const std::vector<DocumentSpans>& pred,
                     const std::set<EntityType>& exclude) {
  std::map<std::string, std::vector<EntitySpan>> g;
  std::map<std::string, std::vector<EntitySpan>> p;
  for (const auto& d : gold) {
    auto& v = g[d.doc_id];
    v.insert(v.end(), d.spans.begin(), d.spans.end());
  }
  for (const auto& d : pred) {
    auto& v = p[d.doc_id];
    v.insert(v.end(), d.spans.begin(), d.spans.end());
  }
  std::set<std::string> docs;
  for (const auto& [id, _] : g) docs.insert(id);
  for (const auto& [id, _] : p) docs.insert(id);

  EvalResult result;
  for (EntityType t : kEntityTypes) {
    if (!exclude.count(t)) result.per_type[t] = {};
  }
  static const std::vector<EntitySpan> none;
  for (const auto& doc : docs) {
    const auto gi = g.find(doc);
    const auto pi = p.find(doc);
    const auto gold_keys = span_set(gi == g.end() ? none : gi->second, exclude, doc, "gold");
    const auto pred_keys = span_set(pi == p.end() ? none : pi->second, exclude, doc, "predicted");
    for (const auto& k : pred_keys) {
      auto& c = result.per_type[static_cast<EntityType>(std::get<2>(k))];
      if (gold_keys.count(k)) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    }
    for (const auto& k : gold_keys) {
      if (!pred_keys.count(k)) ++result.per_type[static_cast<EntityType>(std::get<2>(k))].fn;
    }
  }
  for (const auto& [t, c] : result.per_type) result.overall += c;
  return result;
}

std::string format_prf(const Counts& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f / %.1f / %.1f", 100.0 * c.precision(), 100.0 * c.recall(),
                100.0 * c.f1());
  return buf;
}

std::string report(const EvalResult& result) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %-22s %6s %6s %6s\n", "type", "P / R / F1", "tp", "fp", "fn");
  out << buf;
  auto row = [&](std::string_view name, const Counts& c) {
    std::snprintf(buf, sizeof buf, "%-18.*s %-22s %6zu %6zu %6zu\n", static_cast<int>(name.size()),
                  name.data(), format_prf(c).c_str(), c.tp, c.fp, c.fn);
    out << buf;
  };
  row("overall", result.overall);
  for (const auto& [t, c] : result.per_type) row(to_string(t), c);
  return out.str();
}

nlohmann::json report_json(const EvalResult& result) {
  auto counts = [](const Counts& c) {
    return nlohmann::json{{"tp", c.tp},
                          {"fp", c.fp},
                          {"fn", c.fn},
                          {"precision", c.precision()},
                          {"recall", c.recall()},
                          {"f1", c.f1()}};
  };
  nlohmann::json j;
  j["overall"] = counts(result.overall);
  j["per_type"] = nlohmann::json::object();
  for (const auto& [t, c] : result.per_type) j["per_type"][std::string(to_string(t))] = counts(c);
  return j;
}

std::vector<DocumentSpans> load_spans(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<DocumentSpans> out;
    for (auto& doc : load_standoff_dir(path)) out.push_back({doc.document.id, std::move(doc.spans)});
    return out;
  }
  if (!fs::exists(path)) throw DataError("no such file or directory: " + path.string());
  return spans_by_document(read_corpus_tsv(path, LabelCatalog{}));
}

}  // namespace nlnde
