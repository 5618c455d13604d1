#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "prefgen/io.hpp"
#include "prefgen/types.hpp"
#include "test_util.hpp"

using namespace prefgen;

static std::vector<ChoiceRecord> synthetic_records(std::size_t n, std::size_t n_pos) {
  std::vector<ChoiceRecord> recs;
  recs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto expo = i < n_pos ? Exposure::chosen : Exposure::unchosen_in_chosen_theme;
    recs.push_back(make_choice_record("c" + std::to_string(i % 931),
                                      "t" + std::to_string(i % 585), expo));
  }
  return recs;
}

TEST_CASE("dataset stats counts and rate") {
  auto recs = synthetic_records(33804, 3629);
  auto st = compute_dataset_stats(recs);
  CHECK(st.n_pairs == 33804);
  CHECK(st.n_positive == 3629);
  CHECK(st.n_negative == 30175);
  CHECK(st.n_positive + st.n_negative == st.n_pairs);
  CHECK_THAT(st.positive_rate, Catch::Matchers::WithinAbs(0.1074, 5e-5));

  SECTION("adding external positives reaches 35,179 pairs") {
    for (int i = 0; i < 1375; ++i)
      recs.push_back(make_choice_record("x" + std::to_string(i), "xt", Exposure::external_positive));
    auto st2 = compute_dataset_stats(recs);
    CHECK(st2.n_pairs == 35179);
    CHECK(st2.n_positive == 3629 + 1375);
  }
}

TEST_CASE("dataset stats trivial and error cases") {
  std::vector<ChoiceRecord> one{make_choice_record("c", "t", Exposure::chosen)};
  auto st = compute_dataset_stats(one);
  CHECK(st.n_pairs == 1);
  CHECK(st.positive_rate == 1.0);
  CHECK_THROWS_AS(compute_dataset_stats({}), DataError);
}

TEST_CASE("train/test split sizes match round-half-up") {
  CHECK(split_test_size(33804, 0.4) == 13522);
  CHECK(33804 - split_test_size(33804, 0.4) == 20282);
  CHECK(split_test_size(35179, 0.3) == 10554);
  CHECK(35179 - split_test_size(35179, 0.3) == 24625);

  std::vector<int> xs(33804);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = int(i);
  auto [train, test] = split_train_test(xs, 0.4, 11);
  CHECK(train.size() == 20282);
  CHECK(test.size() == 13522);

  SECTION("partition is disjoint and exhaustive") {
    std::set<int> all(train.begin(), train.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == xs.size());
  }
}

TEST_CASE("split determinism and degenerate fractions") {
  std::vector<int> xs{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto a = split_train_test(xs, 0.5, 42);
  auto b = split_train_test(xs, 0.5, 42);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  auto c = split_train_test(xs, 0.5, 43);
  CHECK((a.first != c.first || a.second != c.second));

  CHECK_THROWS_AS(split_train_test(xs, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_train_test(xs, 1.0, 1), ConfigError);

  for (std::size_t n : {1u, 2u, 7u, 100u}) {
    std::vector<int> v(n, 0);
    auto [tr, te] = split_train_test(v, 0.3, 5);
    CHECK(tr.size() + te.size() == n);
  }
}

TEST_CASE("choice log round trip and validation") {
  testutil::TempDir tmp("choicelog");
  std::vector<ChoiceRecord> recs{
      make_choice_record("c1", "t1", Exposure::chosen),
      make_choice_record("c1", "t2", Exposure::unchosen_in_chosen_theme),
      make_choice_record("c1", "c_B", Exposure::cover_of_unchosen_theme),
      make_choice_record("x9", "t7", Exposure::external_positive),
  };
  auto path = tmp.file("log.csv");
  write_choice_log(path, recs);
  auto back = read_choice_log(path);
  CHECK(back == recs);

  SECTION("missing header rejected") {
    auto bad = tmp.file("bad.csv");
    {
      std::ofstream out(bad);
      out << "c1,t1,1,chosen\n";
    }
    CHECK_THROWS_AS(read_choice_log(bad), DataError);
  }
  SECTION("outcome inconsistent with exposure rejected") {
    auto bad = tmp.file("bad2.csv");
    {
      std::ofstream out(bad);
      out << "consumer_id,template_id,outcome,exposure\n";
      out << "c1,t1,0,chosen\n";
    }
    CHECK_THROWS_AS(read_choice_log(bad), DataError);
  }
}

TEST_CASE("template catalog round trip") {
  testutil::TempDir tmp("templates");
  Rng rng(7);
  std::vector<DesignTemplate> ts;
  for (int i = 0; i < 3; ++i) {
    DesignTemplate t;
    t.template_id = "tmpl" + std::to_string(i);
    t.theme_id = "theme" + std::to_string(i % 2);
    t.image = Image(8, 8, 3);
    for (auto& v : t.image.px) v = float(rng.uniform());
    quantize_u8(t.image);
    t.is_cover = i == 0;
    if (i < 2)
      t.display_rank = i + 1;
    else
      t.source = Source::external;
    ts.push_back(std::move(t));
  }
  write_templates(tmp.file("catalog"), ts);
  auto back = read_templates(tmp.file("catalog"));
  REQUIRE(back.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(back[i] == ts[i]);
}

TEST_CASE("label set round trip") {
  testutil::TempDir tmp("labels");
  PopularityLabelSet set;
  set.entries = {
      {"t1", 0.41237, 0.4, 0.61538461538461542},
      {"t2", 0.6499999, 0.65, 1.0},
  };
  auto path = tmp.file("labels.csv");
  write_label_set(path, set);
  CHECK(read_label_set(path) == set);
}

TEST_CASE("embedding file round trip and dimension check") {
  testutil::TempDir tmp("embed");
  std::vector<std::pair<std::string, std::vector<double>>> rows{
      {"a", {0.5, -1.25, 3.0}},
      {"b", {1e-17, 2.0, -0.0}},
  };
  auto path = tmp.file("emb.csv");
  write_embeddings(path, rows);
  auto back = read_embeddings(path, 3);
  REQUIRE(back.size() == 2);
  CHECK(back[0].second == rows[0].second);
  CHECK(back[1].second == rows[1].second);
  CHECK_THROWS_AS(read_embeddings(path, 4), DataError);
}

TEST_CASE("png round trip preserves quantized pixels") {
  testutil::TempDir tmp("png");
  Rng rng(3);
  for (int channels : {1, 3}) {
    Image img(5, 9, channels);
    for (auto& v : img.px) v = float(rng.uniform());
    quantize_u8(img);
    auto path = tmp.file("img" + std::to_string(channels) + ".png");
    write_png(path, img);
    auto back = read_png(path);
    CHECK(back == img);
  }
}

TEST_CASE("rng determinism and stage seed fanout") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.uniform_int(0, 9) == b.uniform_int(0, 9));
  }
  CHECK(stage_seed(1, "synth") == stage_seed(1, "synth"));
  CHECK(stage_seed(1, "synth") != stage_seed(1, "embed"));
  CHECK(stage_seed(1, "synth") != stage_seed(2, "synth"));

  SECTION("uniform_int covers its range") {
    Rng r(9);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 200; ++i) seen.insert(r.uniform_int(3, 6));
    CHECK(seen == std::set<std::int64_t>{3, 4, 5, 6});
  }
  SECTION("normal moments are sane") {
    Rng r(11);
    double s = 0, s2 = 0;
    int n = 20000;
    for (int i = 0; i < n; ++i) {
      double x = r.normal();
      s += x;
      s2 += x * x;
    }
    CHECK_THAT(s / n, Catch::Matchers::WithinAbs(0.0, 0.03));
    CHECK_THAT(s2 / n, Catch::Matchers::WithinAbs(1.0, 0.05));
  }
}
