#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "prefgen/types.hpp"

namespace prefgen {

namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline void check_field(const std::string& f) {
  if (f.find(',') != std::string::npos || f.find('\n') != std::string::npos)
    throw DataError("csv field contains a delimiter: " + f);
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    check_field(fields[i]);
    if (i) out.push_back(',');
    out += fields[i];
  }
  return out;
}

// %.17g survives a text round trip bit-exactly for IEEE doubles
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw DataError("");
    return v;
  } catch (...) {
    throw DataError("cannot parse number '" + s + "' in " + ctx);
  }
}

inline long parse_int(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw DataError("");
    return v;
  } catch (...) {
    throw DataError("cannot parse integer '" + s + "' in " + ctx);
  }
}

inline std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_line(line));
  }
  return rows;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw Error("cannot open for writing: " + path);
  }
  void row(const std::vector<std::string>& fields) { out_ << join(fields) << '\n'; }
  void close() {
    out_.flush();
    if (!out_) throw Error("write failure on " + path_);
    out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace csv

// ---- choice logs -----------------------------------------------------------

inline const char* kChoiceLogHeader = "consumer_id,template_id,outcome,exposure";

inline void write_choice_log(const std::string& path, const std::vector<ChoiceRecord>& records) {
  csv::Writer w(path);
  w.row({"consumer_id", "template_id", "outcome", "exposure"});
  for (const auto& r : records)
    w.row({r.consumer_id, r.template_id, std::to_string(r.outcome), to_string(r.exposure)});
  w.close();
}

inline std::vector<ChoiceRecord> read_choice_log(const std::string& path) {
  auto rows = csv::read_rows(path);
  if (rows.empty() || csv::join(rows[0]) != kChoiceLogHeader)
    throw DataError("choice log " + path + " missing required header");
  std::vector<ChoiceRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw DataError("choice log row with wrong arity in " + path);
    ChoiceRecord rec;
    rec.consumer_id = r[0];
    rec.template_id = r[1];
    rec.outcome = int(csv::parse_int(r[2], path));
    rec.exposure = exposure_from_string(r[3]);
    if (rec.outcome != 0 && rec.outcome != 1)
      throw DataError("choice log outcome must be 0/1 in " + path);
    bool want_pos =
        rec.exposure == Exposure::chosen || rec.exposure == Exposure::external_positive;
    if ((rec.outcome == 1) != want_pos)
      throw DataError("choice log outcome inconsistent with exposure in " + path);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---- template catalogs (PNG per template + manifest) -----------------------

inline void write_templates(const std::string& dir, const std::vector<DesignTemplate>& templates) {
  std::filesystem::create_directories(dir);
  csv::Writer w(dir + "/manifest.csv");
  w.row({"template_id", "theme_id", "display_rank", "is_cover", "source"});
  for (const auto& t : templates) {
    w.row({t.template_id, t.theme_id,
           t.display_rank ? std::to_string(*t.display_rank) : std::string(),
           t.is_cover ? "1" : "0", to_string(t.source)});
    write_png(dir + "/" + t.template_id + ".png", t.image);
  }
  w.close();
}

inline std::vector<DesignTemplate> read_templates(const std::string& dir) {
  auto rows = csv::read_rows(dir + "/manifest.csv");
  if (rows.empty() || csv::join(rows[0]) != "template_id,theme_id,display_rank,is_cover,source")
    throw DataError("template manifest in " + dir + " missing required header");
  std::vector<DesignTemplate> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) throw DataError("template manifest row with wrong arity in " + dir);
    DesignTemplate t;
    t.template_id = r[0];
    t.theme_id = r[1];
    if (!r[2].empty()) t.display_rank = int(csv::parse_int(r[2], dir));
    t.is_cover = r[3] == "1";
    t.source = source_from_string(r[4]);
    t.image = read_png(dir + "/" + t.template_id + ".png");
    out.push_back(std::move(t));
  }
  return out;
}

// ---- popularity label sets -------------------------------------------------

inline void write_label_set(const std::string& path, const PopularityLabelSet& set) {
  csv::Writer w(path);
  w.row({"template_id", "raw_score", "bin_value", "normalized_label"});
  for (const auto& e : set.entries)
    w.row({e.template_id, csv::fmt(e.raw_score), csv::fmt(e.bin_value),
           csv::fmt(e.normalized_label)});
  w.close();
}

inline PopularityLabelSet read_label_set(const std::string& path) {
  auto rows = csv::read_rows(path);
  if (rows.empty() || csv::join(rows[0]) != "template_id,raw_score,bin_value,normalized_label")
    throw DataError("label set " + path + " missing required header");
  PopularityLabelSet set;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw DataError("label set row with wrong arity in " + path);
    set.entries.push_back(LabelEntry{r[0], csv::parse_double(r[1], path),
                                     csv::parse_double(r[2], path),
                                     csv::parse_double(r[3], path)});
  }
  return set;
}

// ---- embedding files (id + vector entries per row) --------------------------

inline void write_embeddings(const std::string& path,
                             const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  csv::Writer w(path);
  for (const auto& [id, vec] : rows) {
    std::vector<std::string> fields;
    fields.reserve(vec.size() + 1);
    fields.push_back(id);
    for (double v : vec) fields.push_back(csv::fmt(v));
    w.row(fields);
  }
  w.close();
}

inline std::vector<std::pair<std::string, std::vector<double>>> read_embeddings(
    const std::string& path, std::size_t expected_dim) {
  auto rows = csv::read_rows(path);
  std::vector<std::pair<std::string, std::vector<double>>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() < 2) throw DataError("embedding row too short in " + path);
    if (r.size() - 1 != expected_dim)
      throw DataError("embedding dimension " + std::to_string(r.size() - 1) + " for id '" +
                      r[0] + "' in " + path + ", expected " + std::to_string(expected_dim));
    std::vector<double> vec(r.size() - 1);
    for (std::size_t k = 1; k < r.size(); ++k) vec[k - 1] = csv::parse_double(r[k], path);
    out.emplace_back(r[0], std::move(vec));
  }
  return out;
}

}  // namespace prefgen
