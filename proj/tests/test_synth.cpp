#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "prefgen/synth.hpp"
#include "test_util.hpp"

using namespace prefgen;

static WorldParams small_params() {
  WorldParams p;
  p.latent_dim = 4;
  p.n_consumers = 30;
  p.n_templates = 24;
  p.n_themes = 4;
  p.image_size = 16;
  p.seed = 11;
  return p;
}

TEST_CASE("world generation is deterministic and well-formed") {
  auto p = small_params();
  auto w1 = generate_world(p);
  auto w2 = generate_world(p);
  CHECK(w1.u == w2.u);
  CHECK(w1.s == w2.s);
  CHECK(w1.theme_of == w2.theme_of);
  CHECK(w1.display_rank == w2.display_rank);

  CHECK(w1.consumer_ids.size() == 30);
  CHECK(w1.template_ids.size() == 24);
  CHECK(w1.theme_ids.size() == 4);
  for (auto& members : w1.theme_templates) CHECK(!members.empty());

  std::vector<int> ranks = w1.display_rank;
  std::sort(ranks.begin(), ranks.end());
  std::vector<int> want(24);
  std::iota(want.begin(), want.end(), 1);
  CHECK(ranks == want);  // ranks are a permutation of 1..m

  SECTION("different seed changes the draw") {
    p.seed = 12;
    auto w3 = generate_world(p);
    CHECK(w1.u != w3.u);
  }
  SECTION("config validation") {
    p.latent_dim = 1;
    CHECK_THROWS_AS(generate_world(p), ConfigError);
    p = small_params();
    p.latent_dim = 9;
    CHECK_THROWS_AS(generate_world(p), ConfigError);
    p = small_params();
    p.n_themes = 100;
    CHECK_THROWS_AS(generate_world(p), ConfigError);
  }
  SECTION("default theme count derives from template count") {
    p = small_params();
    p.n_themes = 0;
    p.n_templates = 585;
    auto w = generate_world(p);
    CHECK(w.theme_ids.size() == 84);  // ~7 templates per theme
  }
}

TEST_CASE("rendered brightness is monotone in the first style coordinate") {
  std::vector<double> base{0.0, 0.4, -0.3, 0.2};
  double prev = -1.0;
  for (double s0 : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    auto sv = base;
    sv[0] = s0;
    Image img = render_style_image(sv, 16);
    double mean = 0;
    for (float v : img.px) mean += v;
    mean /= double(img.px.size());
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("render inversion recovers style vectors") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> sv(5);
    for (auto& v : sv) v = rng.normal();
    Image img = render_style_image(sv, 32);
    auto back = invert_render_style(img, 5);
    for (int k = 0; k < 5; ++k) CHECK_THAT(back[k], Catch::Matchers::WithinAbs(sv[k], 0.05));
  }
}

TEST_CASE("oracle probabilities") {
  auto p = small_params();
  auto world = generate_world(p);

  SECTION("all probabilities strictly inside (0,1)") {
    for (int i = 0; i < p.n_consumers; ++i)
      for (int j = 0; j < p.n_templates; ++j) {
        double pr = oracle_choice_prob_idx(world, i, j);
        CHECK(pr > 0.0);
        CHECK(pr < 1.0);
      }
  }
  SECTION("alpha/beta/gamma zero gives 0.5 everywhere") {
    auto w = world;
    w.params.alpha = w.params.beta = w.params.gamma = 0.0;
    CHECK(oracle_choice_prob(w, w.consumer_ids[0], w.template_ids[0]) == 0.5);
  }
  SECTION("monotone in the taste-style dot product") {
    auto w = world;
    w.params.gamma = 0.0;
    // scale one consumer's taste toward a template's style and watch p rise
    int j = 3;
    double prev = 0.0;
    for (double scale : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      for (int k = 0; k < w.params.latent_dim; ++k) w.u[0][k] = scale * w.s[j][k];
      double pr = oracle_choice_prob_idx(w, 0, j);
      if (scale > 0.0) CHECK(pr > prev);
      prev = pr;
    }
  }
  SECTION("decreasing in display rank for gamma > 0") {
    auto w = world;
    w.display_rank[0] = 1;
    double hi = oracle_choice_prob_idx(w, 0, 0);
    w.display_rank[0] = 20;
    double lo = oracle_choice_prob_idx(w, 0, 0);
    CHECK(lo < hi);
  }
  SECTION("unknown ids raise lookup errors") {
    CHECK_THROWS_AS(oracle_choice_prob(world, "nobody", world.template_ids[0]), DataError);
    CHECK_THROWS_AS(oracle_choice_prob(world, world.consumer_ids[0], "nothing"), DataError);
  }
  SECTION("batched table matches the scalar formula to 1e-12") {
    auto table = oracle_prob_table(world);
    for (int i = 0; i < p.n_consumers; ++i)
      for (int j = 0; j < p.n_templates; ++j)
        CHECK_THAT(table(i, j),
                   Catch::Matchers::WithinAbs(oracle_choice_prob_idx(world, i, j), 1e-12));
  }
}

TEST_CASE("sampled choices follow the oracle") {
  auto p = small_params();
  p.n_consumers = 400;  // enough draws for the rate comparison
  auto world = generate_world(p);

  auto recs = sample_choices(world, 77);
  CHECK(recs == sample_choices(world, 77));
  CHECK(recs != sample_choices(world, 78));

  // every record is a Bernoulli draw of its own oracle probability, and
  // non-cover templates only appear when their theme's cover was drawn 1;
  // the expected positive rate follows from exactly that structure
  double expected_pos = 0.0, expected_n = 0.0;
  for (int i = 0; i < p.n_consumers; ++i) {
    for (std::size_t th = 0; th < world.theme_ids.size(); ++th) {
      double p_cover = oracle_choice_prob_idx(world, i, world.cover_of_theme[th]);
      expected_pos += p_cover;
      expected_n += 1.0;
      for (int j : world.theme_templates[th]) {
        if (j == world.cover_of_theme[th]) continue;
        double pj = oracle_choice_prob_idx(world, i, j);
        expected_pos += p_cover * pj;
        expected_n += p_cover;
      }
    }
  }
  auto st = compute_dataset_stats(recs);
  CHECK(st.n_pairs > 1000);
  CHECK_THAT(st.positive_rate,
             Catch::Matchers::WithinAbs(expected_pos / expected_n, 0.01));

  SECTION("records agree with the event construction") {
    auto events = sample_order_events(world, 77);
    CHECK(build_choice_records(events) == recs);
    for (const auto& ev : events) CHECK(ev.visible_theme_pages.size() == world.theme_ids.size());
  }
}

TEST_CASE("external photos carry extreme styles and valid masks") {
  auto world = generate_world(small_params());
  auto externals = make_external_photos(world, 12, 2.0, 9);
  REQUIRE(externals.size() == 12);
  double internal_max = 0;
  for (const auto& sv : world.s) {
    double n2 = 0;
    for (double v : sv) n2 += v * v;
    internal_max = std::max(internal_max, std::sqrt(n2));
  }
  for (const auto& ext : externals) {
    double n2 = 0;
    for (double v : ext.style) n2 += v * v;
    CHECK_THAT(std::sqrt(n2), Catch::Matchers::WithinRel(2.0 * std::sqrt(4.0), 1e-9));
    CHECK(std::sqrt(n2) > internal_max);
    CHECK(ext.photo.person_mask.count() > 0);
    CHECK(ext.photo.person_mask.count() <
          std::size_t(ext.photo.image.h) * ext.photo.image.w);
    // splitting recovers a template: unmasked pixels match the style render
    auto [tmpl, face] = split_external_photo(ext.photo);
    Image pure = render_style_image(ext.style, world.params.image_size);
    for (int y = 0; y < pure.h; ++y)
      for (int x = 0; x < pure.w; ++x)
        if (!ext.photo.person_mask.at(y, x))
          for (int ch = 0; ch < 3; ++ch) CHECK(tmpl.image.at(y, x, ch) == pure.at(y, x, ch));
    CHECK(face.h >= 1);
  }
  CHECK(externals[0].theme_id.substr(0, 5) == "theme");
}

TEST_CASE("world persistence round trip") {
  testutil::TempDir tmp("world");
  auto world = generate_world(small_params());
  write_world(tmp.file("w"), world);
  auto back = read_world(tmp.file("w"));
  CHECK(back.u == world.u);
  CHECK(back.s == world.s);
  CHECK(back.theme_of == world.theme_of);
  CHECK(back.display_rank == world.display_rank);
  CHECK(back.consumer_ids == world.consumer_ids);
  CHECK(back.template_ids == world.template_ids);
  CHECK(back.cover_of_theme == world.cover_of_theme);
  CHECK(back.params.alpha == world.params.alpha);
  CHECK(back.params.seed == world.params.seed);
}
