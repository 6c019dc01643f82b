#pragma once

// Per-node z_u inspection: which tag pairs drive large scaling values in
// each dimension.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgcomp/checkpoint.hpp"
#include "tgcomp/forward.hpp"

namespace tgc {

struct ZDumpRow {
  std::size_t sentence = 0;
  ZRow row;
  std::string phrase;
  std::string left_phrase, right_phrase;
};

struct TagPairStat {
  int left_tag = 0, right_tag = 0;
  std::size_t count = 0;
  double mean_abs = 0.0;
  double sigma_above = 0.0;  // (mean_abs - corpus mean) / corpus std
  std::vector<std::string> examples;
};

struct DimRanking {
  std::size_t index = 0;
  double corpus_mean = 0.0;
  double corpus_std = 0.0;
  std::vector<TagPairStat> top;
};

struct ZReport {
  std::vector<ZDumpRow> rows;
  std::vector<DimRanking> dims;

  /// Largest sigma_above over every dimension's top pair (0 when empty).
  double max_sigma() const {
    double best = 0.0;
    for (const auto& d : dims) {
      if (!d.top.empty()) best = std::max(best, d.top.front().sigma_above);
    }
    return best;
  }
};

struct InspectOptions {
  std::size_t top_k = 5;
  std::size_t min_count = 5;  // tag pairs seen fewer times are not ranked
  std::size_t max_examples = 4;
};

inline std::string join_words(const std::vector<std::string>& words, std::pair<int, int> span) {
  std::string s;
  for (int i = span.first; i < span.second; ++i) {
    if (i > span.first) s += ' ';
    s += words[static_cast<std::size_t>(i)];
  }
  return s;
}

/// Runs the hyper model over every tree (second trees of pairs included) and
/// ranks, per z_u dimension, tag pairs by mean |z_u[i]|.
inline ZReport inspect_z(const Checkpoint& ck, std::span<const Example> xs,
                         const InspectOptions& opt = {}) {
  if (!is_hyper(ck.params.spec().variant)) {
    throw std::invalid_argument(std::string("inspect_z: ") + variant_name(ck.params.spec().variant) +
                                " has no hyper network");
  }
  ModelParams m = ck.params;
  ZReport rep;
  std::size_t sentence = 0;
  auto visit = [&](const Tree& t) {
    ad::Tape tape;
    const Forward f = forward(tape, m, t);
    std::vector<std::string> words;
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) words.push_back(ck.words.token(n.word));
    }
    for (ZRow& r : collect_zsignals(t, f, m.spec())) {
      ZDumpRow d;
      d.sentence = sentence;
      d.phrase = join_words(words, r.span);
      d.left_phrase = join_words(words, r.left_span);
      d.right_phrase = join_words(words, {r.left_span.second, r.span.second});
      d.row = std::move(r);
      rep.rows.push_back(std::move(d));
    }
    ++sentence;
  };
  for (const Example& ex : xs) {
    visit(ex.tree);
    if (ex.other) visit(*ex.other);
  }
  if (rep.rows.empty()) return rep;

  const std::size_t dims = rep.rows.front().row.z_u.size();
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    groups[{rep.rows[i].row.left_tag, rep.rows[i].row.right_tag}].push_back(i);
  }
  const auto n = static_cast<double>(rep.rows.size());
  for (std::size_t k = 0; k < dims; ++k) {
    DimRanking dr;
    dr.index = k;
    double s = 0.0, ss = 0.0;
    for (const auto& r : rep.rows) {
      const double a = std::fabs(r.row.z_u[k]);
      s += a;
      ss += a * a;
    }
    dr.corpus_mean = s / n;
    dr.corpus_std = std::sqrt(std::max(0.0, ss / n - dr.corpus_mean * dr.corpus_mean));
    std::vector<TagPairStat> stats;
    for (const auto& [pair, idx] : groups) {
      if (idx.size() < opt.min_count) continue;
      TagPairStat st;
      st.left_tag = pair.first;
      st.right_tag = pair.second;
      st.count = idx.size();
      double sum = 0.0;
      for (std::size_t i : idx) sum += std::fabs(rep.rows[i].row.z_u[k]);
      st.mean_abs = sum / static_cast<double>(idx.size());
      st.sigma_above = dr.corpus_std > 0.0 ? (st.mean_abs - dr.corpus_mean) / dr.corpus_std : 0.0;
      std::vector<std::size_t> by_value = idx;
      std::sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) {
        const double va = std::fabs(rep.rows[a].row.z_u[k]), vb = std::fabs(rep.rows[b].row.z_u[k]);
        return va != vb ? va > vb : a < b;
      });
      for (std::size_t j = 0; j < by_value.size() && j < opt.max_examples; ++j) {
        const auto& r = rep.rows[by_value[j]];
        st.examples.push_back(r.left_phrase + "+" + r.right_phrase);
      }
      stats.push_back(std::move(st));
    }
    std::sort(stats.begin(), stats.end(), [](const TagPairStat& a, const TagPairStat& b) {
      if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
      return std::make_pair(a.left_tag, a.right_tag) < std::make_pair(b.left_tag, b.right_tag);
    });
    if (stats.size() > opt.top_k) stats.resize(opt.top_k);
    dr.top = std::move(stats);
    rep.dims.push_back(std::move(dr));
  }
  return rep;
}

/// TSV: sentence id, node path, parent/left/right tag, phrase, z_u values.
inline void write_zdump(const ZReport& rep, const Vocab& tags, std::ostream& out) {
  out << "sentence\tpath\tparent_tag\tleft_tag\tright_tag\tphrase";
  const std::size_t dims = rep.rows.empty() ? 0 : rep.rows.front().row.z_u.size();
  for (std::size_t k = 0; k < dims; ++k) out << "\tz" << k;
  out << '\n';
  char buf[32];
  for (const auto& r : rep.rows) {
    out << r.sentence << '\t' << r.row.path << '\t' << tags.token(r.row.parent_tag) << '\t'
        << tags.token(r.row.left_tag) << '\t' << tags.token(r.row.right_tag) << '\t' << r.phrase;
    for (double v : r.row.z_u) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

inline nlohmann::json ranking_json(const ZReport& rep, const Vocab& tags) {
  nlohmann::json j;
  j["num_rows"] = rep.rows.size();
  j["num_dims"] = rep.dims.size();
  j["max_sigma_above_mean"] = rep.max_sigma();
  j["dimensions"] = nlohmann::json::array();
  for (const auto& d : rep.dims) {
    nlohmann::json dj{{"index", d.index}, {"corpus_mean", d.corpus_mean}, {"corpus_std", d.corpus_std}};
    dj["top"] = nlohmann::json::array();
    for (const auto& s : d.top) {
      dj["top"].push_back({{"tags", tags.token(s.left_tag) + "+" + tags.token(s.right_tag)},
                           {"count", s.count},
                           {"mean_abs", s.mean_abs},
                           {"sigma_above_mean", s.sigma_above},
                           {"examples", s.examples}});
    }
    j["dimensions"].push_back(std::move(dj));
  }
  return j;
}

}  // namespace tgc
