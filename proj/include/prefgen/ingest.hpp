#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prefgen/image.hpp"
#include "prefgen/types.hpp"

namespace prefgen {

// One theme's selection page as browsed: the cover plus every template shown.
struct ThemePage {
  std::string theme_id;
  std::string cover_template_id;
  std::vector<std::string> template_ids;  // includes the cover
};

struct RawOrderEvent {
  std::string consumer_id;
  std::set<std::string> chosen_theme_ids;
  std::set<std::string> chosen_template_ids;
  std::vector<ThemePage> visible_theme_pages;
};

// Choice-record construction. For a chosen theme every browsed template
// yields a record (1 if photographed, else 0); an unchosen theme yields a
// single 0 record for its cover and nothing for the rest.
inline std::vector<ChoiceRecord> build_choice_records(const std::vector<RawOrderEvent>& events) {
  std::vector<ChoiceRecord> out;
  for (const auto& ev : events) {
    std::set<std::string> templates_of_chosen_themes;
    for (const auto& page : ev.visible_theme_pages) {
      if (std::find(page.template_ids.begin(), page.template_ids.end(),
                    page.cover_template_id) == page.template_ids.end())
        throw DataError("order event for " + ev.consumer_id + ": cover " +
                        page.cover_template_id + " not listed on its page");
      if (ev.chosen_theme_ids.count(page.theme_id))
        templates_of_chosen_themes.insert(page.template_ids.begin(), page.template_ids.end());
    }
    for (const auto& th : ev.chosen_theme_ids) {
      bool found = std::any_of(ev.visible_theme_pages.begin(), ev.visible_theme_pages.end(),
                               [&](const ThemePage& p) { return p.theme_id == th; });
      if (!found)
        throw DataError("order event for " + ev.consumer_id + ": chosen theme " + th +
                        " was never browsed");
    }
    for (const auto& t : ev.chosen_template_ids)
      if (!templates_of_chosen_themes.count(t))
        throw DataError("order event for " + ev.consumer_id + ": chosen template " + t +
                        " lies outside the chosen themes");

    for (const auto& page : ev.visible_theme_pages) {
      if (ev.chosen_theme_ids.count(page.theme_id)) {
        for (const auto& t : page.template_ids)
          out.push_back(make_choice_record(
              ev.consumer_id, t,
              ev.chosen_template_ids.count(t) ? Exposure::chosen
                                              : Exposure::unchosen_in_chosen_theme));
      } else {
        out.push_back(make_choice_record(ev.consumer_id, page.cover_template_id,
                                         Exposure::cover_of_unchosen_theme));
      }
    }
  }
  return out;
}

// ---- external photos --------------------------------------------------------

struct PersonMask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> on;

  PersonMask() = default;
  PersonMask(int h_, int w_) : h(h_), w(w_), on(std::size_t(h_) * w_, 0) {}
  std::uint8_t& at(int y, int x) { return on[std::size_t(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return on[std::size_t(y) * w + x]; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto v : on) c += v != 0;
    return c;
  }
};

struct ExternalPhoto {
  std::string photo_id;
  Image image;           // H x W x 3
  PersonMask person_mask;
};

using Inpainter = std::function<Image(const Image&, const PersonMask&)>;

// Jacobi relaxation: masked pixels start at the unmasked mean and repeatedly
// take the mean of their 8-neighborhood until the update stalls. A constant
// background is a fixed point, so that case is exact.
inline Image neighborhood_mean_inpaint(const Image& img, const PersonMask& mask) {
  Image out = img;
  std::vector<std::pair<int, int>> holes;
  double mean[4] = {0, 0, 0, 0};
  std::size_t n_keep = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      if (mask.at(y, x)) {
        holes.emplace_back(y, x);
      } else {
        ++n_keep;
        for (int ch = 0; ch < img.c; ++ch) mean[ch] += img.at(y, x, ch);
      }
    }
  if (holes.empty()) return out;
  if (n_keep == 0) throw DataError("inpaint: mask covers the entire image");
  for (int ch = 0; ch < img.c; ++ch) mean[ch] /= double(n_keep);
  for (auto [y, x] : holes)
    for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = float(mean[ch]);

  Image next = out;
  for (int iter = 0; iter < 20000; ++iter) {
    float max_delta = 0.0f;
    for (auto [y, x] : holes) {
      for (int ch = 0; ch < img.c; ++ch) {
        double acc = 0.0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dy && !dx) continue;
            int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= img.h || xx < 0 || xx >= img.w) continue;
            acc += out.at(yy, xx, ch);
            ++cnt;
          }
        float v = cnt ? float(acc / cnt) : out.at(y, x, ch);
        max_delta = std::max(max_delta, std::abs(v - out.at(y, x, ch)));
        next.at(y, x, ch) = v;
      }
    }
    for (auto [y, x] : holes)
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = next.at(y, x, ch);
    if (max_delta < 1e-6f) break;
  }
  return out;
}

struct MaskBounds {
  int y0 = 0, y1 = 0, x0 = 0, x1 = 0;  // inclusive
};

inline MaskBounds mask_bounding_box(const PersonMask& mask) {
  MaskBounds b{mask.h, -1, mask.w, -1};
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x)
      if (mask.at(y, x)) {
        b.y0 = std::min(b.y0, y);
        b.y1 = std::max(b.y1, y);
        b.x0 = std::min(b.x0, x);
        b.x1 = std::max(b.x1, x);
      }
  if (b.y1 < 0) throw DataError("mask_bounding_box: empty mask");
  return b;
}

// Removes the person from the photo (template half) and crops the face
// (top 40% of the mask bounding box) for consumer embedding.
inline std::pair<DesignTemplate, Image> split_external_photo(
    const ExternalPhoto& photo, const Inpainter& inpainter = neighborhood_mean_inpaint) {
  if (photo.person_mask.h != photo.image.h || photo.person_mask.w != photo.image.w)
    throw DataError("split_external_photo: mask size differs from image for " + photo.photo_id);
  std::size_t n_on = photo.person_mask.count();
  if (n_on == 0) throw DataError("split_external_photo: empty mask for " + photo.photo_id);
  if (n_on == std::size_t(photo.image.h) * photo.image.w)
    throw DataError("split_external_photo: mask covers entire image for " + photo.photo_id +
                    ", no background to keep");

  DesignTemplate tmpl;
  tmpl.template_id = photo.photo_id;
  tmpl.source = Source::external;
  tmpl.is_cover = false;
  tmpl.image = inpainter(photo.image, photo.person_mask);

  auto b = mask_bounding_box(photo.person_mask);
  int box_h = b.y1 - b.y0 + 1;
  int crop_h = std::max(1, int(std::lround(0.4 * box_h)));
  Image face(crop_h, b.x1 - b.x0 + 1, photo.image.c);
  for (int y = 0; y < crop_h; ++y)
    for (int x = 0; x < face.w; ++x)
      for (int ch = 0; ch < face.c; ++ch)
        face.at(y, x, ch) = photo.image.at(b.y0 + y, b.x0 + x, ch);
  return {std::move(tmpl), std::move(face)};
}

// i.i.d. resampling from the empirical rank distribution
inline std::vector<int> simulate_external_rank(const std::vector<int>& internal_ranks,
                                               std::size_t n, std::uint64_t seed) {
  if (internal_ranks.empty()) throw DataError("simulate_external_rank: no internal ranks");
  Rng rng(seed);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = internal_ranks[std::size_t(rng.uniform_int(0, std::int64_t(internal_ranks.size()) - 1))];
  return out;
}

// mask files are grayscale rasters, >= 50% lit means masked
inline void write_mask(const std::string& path, const PersonMask& mask) {
  Image img(mask.h, mask.w, 1);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) img.at(y, x, 0) = mask.at(y, x) ? 1.0f : 0.0f;
  write_png(path, img);
}

inline PersonMask read_mask(const std::string& path) {
  Image img = read_png(path);
  if (img.c != 1) throw DataError("mask file must be grayscale: " + path);
  PersonMask m(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) m.at(y, x) = img.at(y, x, 0) >= 0.5f ? 1 : 0;
  return m;
}

// ---- order-event logs --------------------------------------------------------
// One line per consumer session:
//   consumer_id|theme,theme|template,template|theme:cover:t1,t2;theme:cover:t3
// Field 2/3 are the chosen sets; field 4 lists every browsed theme page.

inline const char* kOrderEventHeader = "consumer_id|chosen_themes|chosen_templates|visible_pages";

namespace ingestdetail {

inline void check_event_id(const std::string& id, const std::string& consumer) {
  if (id.empty()) throw DataError("order event for " + consumer + ": empty id");
  if (id.find_first_of("|,:;\n\r") != std::string::npos)
    throw DataError("order event for " + consumer + ": id '" + id +
                    "' contains a delimiter character");
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string join_set(const std::set<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out.push_back(',');
    out += id;
  }
  return out;
}

}  // namespace ingestdetail

inline void write_order_events(const std::string& path,
                               const std::vector<RawOrderEvent>& events) {
  std::ofstream out(path);
  if (!out) throw Error("write_order_events: cannot write " + path);
  out << kOrderEventHeader << '\n';
  for (const auto& ev : events) {
    ingestdetail::check_event_id(ev.consumer_id, ev.consumer_id);
    for (const auto& th : ev.chosen_theme_ids) ingestdetail::check_event_id(th, ev.consumer_id);
    for (const auto& t : ev.chosen_template_ids) ingestdetail::check_event_id(t, ev.consumer_id);
    out << ev.consumer_id << '|' << ingestdetail::join_set(ev.chosen_theme_ids) << '|'
        << ingestdetail::join_set(ev.chosen_template_ids) << '|';
    for (std::size_t p = 0; p < ev.visible_theme_pages.size(); ++p) {
      const ThemePage& page = ev.visible_theme_pages[p];
      ingestdetail::check_event_id(page.theme_id, ev.consumer_id);
      ingestdetail::check_event_id(page.cover_template_id, ev.consumer_id);
      if (p > 0) out << ';';
      out << page.theme_id << ':' << page.cover_template_id << ':';
      for (std::size_t k = 0; k < page.template_ids.size(); ++k) {
        ingestdetail::check_event_id(page.template_ids[k], ev.consumer_id);
        if (k > 0) out << ',';
        out << page.template_ids[k];
      }
    }
    out << '\n';
  }
  if (!out) throw Error("write_order_events: write failure on " + path);
}

inline std::vector<RawOrderEvent> read_order_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_order_events: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kOrderEventHeader)
    throw DataError("order event log " + path + " missing required header");
  std::vector<RawOrderEvent> events;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    auto fields = ingestdetail::split_on(line, '|');
    if (fields.size() != 4)
      throw DataError("order event at " + where + ": expected 4 |-separated fields");
    RawOrderEvent ev;
    ev.consumer_id = fields[0];
    if (ev.consumer_id.empty()) throw DataError("order event at " + where + ": empty consumer id");
    if (!fields[1].empty())
      for (const auto& th : ingestdetail::split_on(fields[1], ','))
        ev.chosen_theme_ids.insert(th);
    if (!fields[2].empty())
      for (const auto& t : ingestdetail::split_on(fields[2], ','))
        ev.chosen_template_ids.insert(t);
    if (!fields[3].empty()) {
      for (const auto& page_s : ingestdetail::split_on(fields[3], ';')) {
        auto parts = ingestdetail::split_on(page_s, ':');
        if (parts.size() != 3)
          throw DataError("order event at " + where + ": malformed theme page '" + page_s + "'");
        ThemePage page;
        page.theme_id = parts[0];
        page.cover_template_id = parts[1];
        if (page.theme_id.empty() || page.cover_template_id.empty())
          throw DataError("order event at " + where + ": theme page with empty ids");
        for (const auto& t : ingestdetail::split_on(parts[2], ','))
          if (!t.empty()) page.template_ids.push_back(t);
        ev.visible_theme_pages.push_back(std::move(page));
      }
    }
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace prefgen
