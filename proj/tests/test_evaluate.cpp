#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "prefgen/embed.hpp"
#include "prefgen/evaluate.hpp"
#include "prefgen/ingest.hpp"
#include "prefgen/synth.hpp"
#include "test_util.hpp"

using namespace prefgen;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> vec2(double a, double b) { return {a, b}; }

// independent recomputation used as the oracle for the distance scores
std::vector<double> oracle_distance_scores(const std::vector<std::vector<double>>& gen,
                                           const std::vector<std::vector<double>>& top,
                                           const std::vector<std::vector<double>>& bot) {
  std::vector<double> all;
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  };
  for (const auto& g : gen) {
    for (const auto& r : top) all.push_back(dist(g, r));
    for (const auto& r : bot) all.push_back(dist(g, r));
  }
  double mn = all[0], mx = all[0];
  for (double d : all) {
    mn = std::min(mn, d);
    mx = std::max(mx, d);
  }
  std::vector<double> scores;
  std::size_t p = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    double di = 0;
    for (std::size_t j = 0; j < top.size(); ++j) {
      double d = mx > mn ? (all[p] - mn) / (mx - mn) : 0.0;
      di += d * d;
      ++p;
    }
    for (std::size_t k = 0; k < bot.size(); ++k) {
      double d = mx > mn ? (all[p] - mn) / (mx - mn) : 0.0;
      di += (1.0 - d) * (1.0 - d);
      ++p;
    }
    scores.push_back(di);
  }
  return scores;
}

// gradient image across one axis, lightly noised; the two classes differ only
// in orientation so mean brightness carries no signal
Image gradient_image(int size, bool along_x, Rng& rng) {
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      float base = float(along_x ? x : y) / float(size - 1);
      for (int ch = 0; ch < 3; ++ch) {
        float v = 0.15f + 0.7f * base + 0.05f * float(rng.normal());
        img.at(y, x, ch) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  return img;
}

std::vector<Image> gradient_set(int n, int size, bool along_x, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Image> out;
  for (int i = 0; i < n; ++i) out.push_back(gradient_image(size, along_x, rng));
  return out;
}

}  // namespace

TEST_CASE("choice probability report normalization") {
  SECTION("baseline column is exactly one and deltas follow the means") {
    auto r = make_choice_prob_report({"real", "genA", "genB"}, {0.20, 0.19, 0.22},
                                     {{}, {}, {}});
    CHECK(r.normalized[0] == 1.0);
    CHECK_THAT(r.normalized[1], WithinAbs(0.95, 1e-12));
    CHECK_THAT(r.deltas[1], WithinAbs(-0.05, 1e-12));
    CHECK_THAT(r.deltas[2], WithinAbs(0.10, 1e-12));
    CHECK(r.deltas[0] == 0.0);
  }
  SECTION("swapping the baseline to an equal-mean set zeroes both deltas") {
    auto a = make_choice_prob_report({"x", "y"}, {0.31, 0.31}, {{}, {}}, 0);
    auto b = make_choice_prob_report({"x", "y"}, {0.31, 0.31}, {{}, {}}, 1);
    CHECK(a.deltas[0] == 0.0);
    CHECK(a.deltas[1] == 0.0);
    CHECK(b.deltas[0] == 0.0);
    CHECK(b.deltas[1] == 0.0);
    CHECK(b.normalized[1] == 1.0);
  }
  SECTION("shape and baseline validation") {
    CHECK_THROWS_AS(make_choice_prob_report({}, {}, {}), DataError);
    CHECK_THROWS_AS(make_choice_prob_report({"a"}, {1.0, 2.0}, {{}}), DataError);
    CHECK_THROWS_AS(make_choice_prob_report({"a"}, {1.0}, {{}, {}}), DataError);
    CHECK_THROWS_AS(make_choice_prob_report({"a", "b"}, {1.0, 2.0}, {{}, {}}, 2),
                    ConfigError);
    CHECK_THROWS_AS(make_choice_prob_report({"a", "b"}, {0.0, 2.0}, {{}, {}}), DataError);
  }
}

TEST_CASE("choice probability table formats the published rows") {
  // report-format fixtures: the table layout reproduces the published deltas
  // from their set means without rerunning any predictor
  auto model1 = make_choice_prob_report({"internal_real", "baseline_gan", "preference_gan"},
                                        {1.0, 0.9557, 1.0072}, {{}, {}, {}});
  std::string t1 = format_choice_prob_table(model1, "prediction_model_1");
  CHECK_THAT(t1, ContainsSubstring("1.00"));
  CHECK_THAT(t1, ContainsSubstring("-4.43%"));
  CHECK_THAT(t1, ContainsSubstring("+0.72%"));
  CHECK_THAT(t1, ContainsSubstring("internal_real"));
  CHECK_THAT(t1, ContainsSubstring("prediction_model_1"));

  auto model2 = make_choice_prob_report({"internal_real", "baseline_gan", "preference_gan"},
                                        {1.0, 1.0354, 1.0537}, {{}, {}, {}});
  std::string t2 = format_choice_prob_table(model2, "prediction_model_2");
  CHECK_THAT(t2, ContainsSubstring("+3.54%"));
  CHECK_THAT(t2, ContainsSubstring("+5.37%"));

  // two lines, tab-delimited, one column per set plus the label column
  std::istringstream lines(t1);
  std::string head, row, extra;
  REQUIRE(std::getline(lines, head));
  REQUIRE(std::getline(lines, row));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(std::count(head.begin(), head.end(), '\t') == 3);
  CHECK(std::count(row.begin(), row.end(), '\t') == 3);
}

TEST_CASE("choice probability comparison on a trained predictor") {
  // tiny separable table: one face dim, two design dims, rank
  std::vector<FeatureRow> rows;
  Rng rng(5);
  for (int i = 0; i < 160; ++i) {
    FeatureRow r;
    r.consumer_id = "c" + std::to_string(i % 7);
    r.template_id = "t" + std::to_string(i);
    double sig = rng.uniform(-1.0, 1.0);
    r.x = {rng.uniform(-1.0, 1.0), sig, 0.3 * sig + 0.05 * rng.normal(),
           double(1 + (i % 5))};
    r.y = sig > 0 ? 1 : 0;
    rows.push_back(r);
  }
  PredictorConfig pc;
  pc.n_trees = 30;
  pc.seed = 9;
  auto pred = train_predictor(rows, pc, Provenance::internal_only, 1, 2);

  std::vector<ConsumerProfile> consumers;
  for (int i = 0; i < 4; ++i)
    consumers.push_back({"c" + std::to_string(i), {rng.uniform(-1.0, 1.0)},
                         Source::internal});
  consumers.push_back({"ext0", {0.0}, Source::external});  // must be ignored

  std::vector<std::vector<double>> good = {vec2(0.9, 0.32), vec2(0.8, 0.2)};
  std::vector<std::vector<double>> bad = {vec2(-0.9, -0.31), vec2(-0.7, -0.22)};
  std::vector<NamedEmbeddings> sets = {{"same_a", good}, {"same_b", good}, {"worse", bad}};
  std::vector<std::vector<double>> ranks = {{1, 2}, {1, 2}, {1, 2}};
  auto rep = compare_choice_probs(pred, sets, consumers, ranks);

  SECTION("a set compared against itself reports a zero delta") {
    CHECK(rep.normalized[0] == 1.0);
    CHECK(rep.deltas[1] == 0.0);
    CHECK(rep.means[0] == rep.means[1]);
  }
  SECTION("per-image values populate and average into the set means") {
    REQUIRE(rep.per_image.size() == 3);
    REQUIRE(rep.per_image[0].size() == 2);
    CHECK_THAT(rep.means[0],
               WithinAbs(0.5 * (rep.per_image[0][0] + rep.per_image[0][1]), 1e-12));
  }
  SECTION("the separably-worse set lands below the baseline") {
    CHECK(rep.deltas[2] < 0.0);
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(compare_choice_probs(pred, {}, consumers, {}), DataError);
    std::vector<NamedEmbeddings> empty_set = {{"none", {}}};
    CHECK_THROWS_WITH(compare_choice_probs(pred, empty_set, consumers, {{}}),
                      ContainsSubstring("none"));
    CHECK_THROWS_AS(compare_choice_probs(pred, sets, consumers, {{1, 2}, {1, 2}}),
                    DataError);
    std::vector<std::vector<double>> short_ranks = {{1}, {1, 2}, {1, 2}};
    CHECK_THROWS_AS(compare_choice_probs(pred, sets, consumers, short_ranks), DataError);
  }
}

TEST_CASE("predictor deltas agree in sign with the oracle on a separable world",
          "[evaluate][world]") {
  WorldParams wp;
  wp.latent_dim = 5;
  wp.n_consumers = 250;
  wp.n_templates = 60;
  wp.beta = 2.0;
  wp.seed = 21;
  auto world = generate_world(wp);
  auto recs = sample_choices(world, 33);

  auto face_emb = make_face_embedder(16, 3);
  auto design_emb = make_design_embedder(32, 3);
  std::map<std::string, std::vector<double>> faces, designs;
  std::map<std::string, int> ranks;
  for (int i = 0; i < wp.n_consumers; ++i)
    faces[world.consumer_ids[i]] =
        embed_face(face_emb, render_consumer_image(world.u[i], wp.image_size, 100 + i));
  for (int j = 0; j < wp.n_templates; ++j) {
    designs[world.template_ids[j]] = embed_design(design_emb, render_template_image(world, j));
    ranks[world.template_ids[j]] = world.display_rank[j];
  }
  auto rows = build_feature_rows(recs, faces, designs, ranks);
  PredictorConfig pc;
  pc.n_trees = 40;
  pc.seed = 7;
  auto pred = train_predictor(rows, pc, Provenance::internal_only, 16, 32);

  // oracle popularity per template, averaged over every consumer
  std::vector<double> oracle_pop(std::size_t(wp.n_templates), 0.0);
  for (int j = 0; j < wp.n_templates; ++j) {
    for (int i = 0; i < wp.n_consumers; ++i)
      oracle_pop[std::size_t(j)] += oracle_choice_prob_idx(world, i, j);
    oracle_pop[std::size_t(j)] /= double(wp.n_consumers);
  }
  std::vector<int> order(static_cast<std::size_t>(wp.n_templates));
  for (int j = 0; j < wp.n_templates; ++j) order[std::size_t(j)] = j;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return oracle_pop[std::size_t(a)] > oracle_pop[std::size_t(b)]; });

  auto set_of = [&](const std::vector<int>& ids) {
    NamedEmbeddings s;
    std::vector<double> rk;
    for (int j : ids) {
      s.embeddings.push_back(designs[world.template_ids[j]]);
      rk.push_back(double(world.display_rank[j]));
    }
    return std::pair{s, rk};
  };
  std::vector<int> all_ids(order.begin(), order.end());
  std::vector<int> top_ids(order.begin(), order.begin() + 10);
  std::vector<int> bottom_ids(order.end() - 10, order.end());
  auto [base_set, base_ranks] = set_of(all_ids);
  auto [top_set, top_ranks] = set_of(top_ids);
  auto [bot_set, bot_ranks] = set_of(bottom_ids);
  base_set.name = "all_internal";
  top_set.name = "most_popular";
  bot_set.name = "least_popular";

  std::vector<ConsumerProfile> consumers;
  for (int i = 0; i < wp.n_consumers; ++i)
    consumers.push_back({world.consumer_ids[i], faces[world.consumer_ids[i]],
                         Source::internal});

  auto rep = compare_choice_probs(pred, {base_set, top_set, bot_set}, consumers,
                                  {base_ranks, top_ranks, bot_ranks});

  // the same deltas recomputed straight from the oracle means
  double base_mean = mean_of(oracle_pop);
  auto oracle_mean_of = [&](const std::vector<int>& ids) {
    double acc = 0;
    for (int j : ids) acc += oracle_pop[std::size_t(j)];
    return acc / double(ids.size());
  };
  double top_delta = oracle_mean_of(top_ids) / base_mean - 1.0;
  double bot_delta = oracle_mean_of(bottom_ids) / base_mean - 1.0;
  REQUIRE(top_delta > 0.01);   // the world must actually separate the sets
  REQUIRE(bot_delta < -0.01);
  CHECK(rep.deltas[1] > 0.0);  // predictor-based deltas agree in sign
  CHECK(rep.deltas[2] < 0.0);
}

TEST_CASE("distance metric endpoints and oracle") {
  SECTION("identical to every preferred reference scores zero") {
    std::vector<std::vector<double>> gen = {vec2(0, 0)};
    std::vector<std::vector<double>> top = {vec2(0, 0), vec2(0, 0), vec2(0, 0)};
    std::vector<std::vector<double>> bot = {vec2(2, 0), vec2(-2, 0), vec2(0, 2)};
    auto rep = distance_metric(gen, top, bot);
    CHECK_THAT(rep.per_image[0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(rep.mean, WithinAbs(0.0, 1e-12));
  }
  SECTION("the inverted placement scores the maximum of six") {
    std::vector<std::vector<double>> gen = {vec2(0, 0)};
    std::vector<std::vector<double>> top = {vec2(2, 0), vec2(-2, 0), vec2(0, 2)};
    std::vector<std::vector<double>> bot = {vec2(0, 0), vec2(0, 0), vec2(0, 0)};
    auto rep = distance_metric(gen, top, bot);
    CHECK_THAT(rep.per_image[0], WithinAbs(6.0, 1e-12));
  }
  SECTION("hand-loop recomputation matches to 1e-9") {
    Rng rng(17);
    auto draw = [&](int n, int dim) {
      std::vector<std::vector<double>> out;
      for (int i = 0; i < n; ++i) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (auto& x : v) x = rng.uniform(-3.0, 3.0);
        out.push_back(v);
      }
      return out;
    };
    auto gen = draw(5, 7), top = draw(3, 7), bot = draw(3, 7);
    auto rep = distance_metric(gen, top, bot);
    auto want = oracle_distance_scores(gen, top, bot);
    REQUIRE(rep.per_image.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(rep.per_image[i], WithinAbs(want[i], 1e-9));
    std::vector<double> sorted = want;
    std::sort(sorted.begin(), sorted.end());
    CHECK_THAT(rep.mean, WithinAbs(mean_of(want), 1e-9));
    CHECK_THAT(rep.median, WithinAbs(sorted[2], 1e-9));
  }
  SECTION("scores stay inside [0, 6] for arbitrary embeddings") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
      int dim = 1 + int(rng.uniform_int(1, 9));
      std::vector<std::vector<double>> gen, top, bot;
      auto fill = [&](std::vector<std::vector<double>>& dst, int n) {
        for (int i = 0; i < n; ++i) {
          std::vector<double> v(static_cast<std::size_t>(dim));
          for (auto& x : v) x = rng.uniform(-10.0, 10.0);
          dst.push_back(v);
        }
      };
      fill(gen, 6);
      fill(top, 3);
      fill(bot, 3);
      for (double d : distance_metric(gen, top, bot).per_image) {
        CHECK(d >= 0.0);
        CHECK(d <= 6.0);
      }
    }
  }
  SECTION("degenerate all-equal distances normalize to zero") {
    // generated equidistant from every reference: the pool collapses
    std::vector<std::vector<double>> gen = {vec2(0, 0)};
    std::vector<std::vector<double>> top = {vec2(1, 0), vec2(0, 1), vec2(-1, 0)};
    std::vector<std::vector<double>> bot = {vec2(0, -1), vec2(1, 0), vec2(0, 1)};
    auto rep = distance_metric(gen, top, bot);
    CHECK_THAT(rep.per_image[0], WithinAbs(3.0, 1e-12));  // 0 + 3*(1-0)^2
  }
  SECTION("validation") {
    std::vector<std::vector<double>> some = {vec2(0, 0)};
    CHECK_THROWS_AS(distance_metric({}, some, some), DataError);
    CHECK_THROWS_AS(distance_metric(some, {}, some), DataError);
    CHECK_THROWS_AS(distance_metric(some, some, {}), DataError);
    std::vector<std::vector<double>> wrong = {{1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(distance_metric(some, wrong, some), DataError);
  }
}

TEST_CASE("distance metric falls when moving toward the preferred cluster") {
  // tight preferred cluster at +x, unpopular cluster at -x; two anchor points
  // pin the normalization pool so the probe's pairs stay strictly interior
  std::vector<std::vector<double>> top = {vec2(1.0, 0.0), vec2(1.02, 0.01),
                                          vec2(0.98, -0.01)};
  std::vector<std::vector<double>> bot = {vec2(-1.0, 0.0), vec2(-1.02, 0.01),
                                          vec2(-0.98, -0.01)};
  std::vector<double> probe = vec2(0.2, 0.3);
  std::vector<double> toward = vec2(1.0 - probe[0], 0.0 - probe[1]);
  double norm = std::hypot(toward[0], toward[1]);
  toward[0] /= norm;
  toward[1] /= norm;

  auto score_at = [&](double t) {
    std::vector<std::vector<double>> gen = {
        {probe[0] + t * toward[0], probe[1] + t * toward[1]},
        vec2(0.0, 2.2),    // far anchor holds the pool maximum
        vec2(0.9, 0.05)};  // near anchor holds the pool minimum
    return distance_metric(gen, top, bot).per_image[0];
  };

  double d0 = score_at(0.0);
  double d1 = score_at(0.05);
  double d2 = score_at(0.15);
  double d3 = score_at(0.30);
  CHECK(d1 < d0);
  CHECK(d2 < d1);
  CHECK(d3 < d2);
  // finite-difference directional derivative is decisively negative
  CHECK((d1 - d0) / 0.05 < -0.1);
}

TEST_CASE("preference extremes selection") {
  SECTION("counts dominate and ties break lexicographically") {
    std::map<std::string, long> counts = {{"a", 5}, {"b", 9}, {"c", 1}, {"d", 9},
                                          {"e", 3}, {"f", 1}, {"g", 2}};
    auto [top, bottom] = select_preference_extremes(counts, 2);
    CHECK(top == std::vector<std::string>{"b", "d"});
    CHECK(bottom == std::vector<std::string>{"f", "c"});
  }
  SECTION("fully tied counts still produce disjoint picks") {
    std::map<std::string, long> counts;
    for (int i = 0; i < 6; ++i) counts["t" + std::to_string(i)] = 4;
    auto [top, bottom] = select_preference_extremes(counts, 3);
    CHECK(top == std::vector<std::string>{"t0", "t1", "t2"});
    CHECK(bottom == std::vector<std::string>{"t5", "t4", "t3"});
  }
  SECTION("validation") {
    std::map<std::string, long> five = {
        {"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 5}};
    CHECK_THROWS_AS(select_preference_extremes(five, 3), DataError);
    CHECK_THROWS_AS(select_preference_extremes(five, 0), ConfigError);
  }
}

TEST_CASE("distance table mirrors the published ordering pattern") {
  // lower is better and the preference-guided variants should read lower;
  // the fixture carries the published mean/median shape
  DistanceReport baseline{{}, 0.58, 0.55};
  DistanceReport internal{{}, 0.54, 0.52};
  DistanceReport both{{}, 0.44, 0.40};
  std::string t = format_distance_table({"baseline_gan", "internal_prefs", "all_prefs"},
                                        {baseline, internal, both});
  CHECK_THAT(t, ContainsSubstring("0.58\t0.54\t0.44"));
  CHECK_THAT(t, ContainsSubstring("0.55\t0.52\t0.40"));
  CHECK_THAT(t, ContainsSubstring("statistic\tbaseline_gan\tinternal_prefs\tall_prefs"));
  CHECK(baseline.mean > internal.mean);
  CHECK(internal.mean > both.mean);
  CHECK_THROWS_AS(format_distance_table({"x"}, {}), DataError);
}

TEST_CASE("theme classifier separates orientation classes", "[evaluate][slow]") {
  auto pos_train = gradient_set(60, 32, /*along_x=*/true, 41);
  auto neg_train = gradient_set(60, 32, /*along_x=*/false, 42);
  auto pos_test = gradient_set(20, 32, true, 43);
  auto neg_test = gradient_set(20, 32, false, 44);

  // overlap guard: no test image may repeat a training image
  for (const auto& a : pos_test)
    for (const auto& b : pos_train) CHECK(a.px != b.px);
  for (const auto& a : neg_test)
    for (const auto& b : neg_train) CHECK(a.px != b.px);

  ClassifierConfig cc;
  cc.epochs = 12;
  cc.seed = 6;
  auto clf = train_theme_classifier(pos_train, neg_train, cc);
  REQUIRE(clf.epoch_loss.size() == 12);
  CHECK(clf.epoch_loss.back() < clf.epoch_loss.front());

  auto m = evaluate_theme_classifier(clf, pos_test, neg_test);
  CHECK(m.accuracy >= 0.95);

  SECTION("hit rate complements the fraction predicted negative") {
    auto mixed = pos_test;
    mixed.insert(mixed.end(), neg_test.begin(), neg_test.end());
    double hr = hit_rate(clf, mixed);
    CHECK(hr >= 0.0);
    CHECK(hr <= 1.0);
    long neg_calls = 0;
    for (double p : clf.predict_batch(mixed))
      if (p < 0.5) ++neg_calls;
    CHECK(std::llround(hr * double(mixed.size())) ==
          long(mixed.size()) - neg_calls);
  }
  SECTION("training is reproducible under the seed") {
    ClassifierConfig tiny;
    tiny.epochs = 2;
    tiny.seed = 8;
    std::vector<Image> p2(pos_train.begin(), pos_train.begin() + 8);
    std::vector<Image> n2(neg_train.begin(), neg_train.begin() + 8);
    auto c1 = train_theme_classifier(p2, n2, tiny);
    auto c2 = train_theme_classifier(p2, n2, tiny);
    CHECK(c1.epoch_loss == c2.epoch_loss);
    CHECK(c1.predict(pos_test[0]) == c2.predict(pos_test[0]));
  }
}

TEST_CASE("theme classifier validation and hit-rate identities") {
  std::vector<Image> some = gradient_set(2, 32, true, 50);
  SECTION("both classes are required") {
    CHECK_THROWS_AS(train_theme_classifier(some, {}, {}), DataError);
    CHECK_THROWS_AS(train_theme_classifier({}, some, {}), DataError);
  }
  SECTION("config validation") {
    ClassifierConfig bad;
    bad.epochs = 0;
    CHECK_THROWS_AS(train_theme_classifier(some, some, bad), ConfigError);
    bad = {};
    bad.image_size = 20;  // not a power of two
    CHECK_THROWS_AS(train_theme_classifier(some, some, bad), ConfigError);
  }
  SECTION("an always-positive scorer hits everything") {
    auto ones = [](const Image&) { return 1.0; };
    CHECK(hit_rate(ones, some) == 1.0);
  }
  SECTION("hit rate over a union is the weighted mean of the parts") {
    auto score = [](const Image& img) { return img.at(0, 1, 0) > 0.3 ? 0.9 : 0.1; };
    auto a = gradient_set(7, 32, true, 51);
    auto b = gradient_set(5, 32, false, 52);
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    double expect =
        (hit_rate(score, a) * 7.0 + hit_rate(score, b) * 5.0) / 12.0;
    CHECK_THAT(hit_rate(score, both), WithinAbs(expect, 1e-12));
  }
  SECTION("empty inputs are rejected") {
    auto ones = [](const Image&) { return 1.0; };
    CHECK_THROWS_AS(hit_rate(ones, {}), DataError);
    ThemeClassifier clf;
    CHECK_THROWS_AS(hit_rate(clf, some), ConfigError);  // no weights attached
  }
}

TEST_CASE("classifier table carries the published fixture row") {
  PredictorMetrics m;
  m.accuracy = 0.972;
  m.fnr = 0.024;
  m.fpr = 0.034;
  std::string t = format_classifier_table(m, 0.99);
  CHECK_THAT(t, ContainsSubstring("0.972"));
  CHECK_THAT(t, ContainsSubstring("0.024"));
  CHECK_THAT(t, ContainsSubstring("0.034"));
  CHECK_THAT(t, ContainsSubstring("0.99"));
  CHECK_THAT(t, ContainsSubstring("accuracy\tfnr\tfpr\thit_rate"));
}

TEST_CASE("histogram construction") {
  SECTION("a single value fills exactly one bin") {
    auto h = make_histograms({{"solo", {3.14}}}, 10);
    long total = 0, nonzero = 0;
    for (long c : h.counts[0]) {
      total += c;
      if (c) ++nonzero;
    }
    CHECK(total == 1);
    CHECK(nonzero == 1);
    CHECK(h.counts[0][0] == 1);
  }
  SECTION("counts sum to the series lengths") {
    Rng rng(3);
    std::vector<double> a(137), b(53);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.uniform(-2.0, 5.0);
    auto h = make_histograms({{"a", a}, {"b", b}}, 7);
    long sa = 0, sb = 0;
    for (long c : h.counts[0]) sa += c;
    for (long c : h.counts[1]) sb += c;
    CHECK(sa == 137);
    CHECK(sb == 53);
  }
  SECTION("the shared maximum lands in the last bin") {
    auto h = make_histograms({{"ends", {0.0, 1.0}}}, 10);
    CHECK(h.counts[0][0] == 1);
    CHECK(h.counts[0][9] == 1);
  }
  SECTION("uniform draws spread evenly") {
    Rng rng(11);
    std::vector<double> u(10000);
    for (auto& v : u) v = rng.uniform();
    auto h = make_histograms({{"u", u}}, 10);
    long mn = h.counts[0][0], mx = h.counts[0][0];
    for (long c : h.counts[0]) {
      mn = std::min(mn, c);
      mx = std::max(mx, c);
    }
    REQUIRE(mn > 0);
    CHECK(double(mx) / double(mn) < 1.3);
  }
  SECTION("validation") {
    CHECK_THROWS_AS(make_histograms({}, 4), DataError);
    CHECK_THROWS_AS(make_histograms({{"e", {}}}, 4), DataError);
    CHECK_THROWS_AS(make_histograms({{"x", {1.0}}}, 0), ConfigError);
    double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_histograms({{"x", {1.0, inf}}}, 4), DataError);
  }
}

TEST_CASE("histogram emission writes a table and a plot") {
  testutil::TempDir tmp("hist");
  Rng rng(19);
  std::vector<double> a(300), b(200);
  for (auto& v : a) v = rng.uniform(0.0, 1.0);
  for (auto& v : b) v = 0.3 + 0.4 * rng.uniform();
  const std::string table = tmp.file("hist.tsv");
  const std::string plot = tmp.file("hist.png");
  auto h = emit_histograms({{"real", a}, {"generated", b}}, 10, table, plot);

  SECTION("the table file parses back to the same counts") {
    std::ifstream in(table);
    REQUIRE(in.good());
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK_THAT(header, ContainsSubstring("real"));
    CHECK_THAT(header, ContainsSubstring("generated"));
    long sum_a = 0, sum_b = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream fields(line);
      std::string lo_s, hi_s, a_s, b_s;
      REQUIRE(std::getline(fields, lo_s, '\t'));
      REQUIRE(std::getline(fields, hi_s, '\t'));
      REQUIRE(std::getline(fields, a_s, '\t'));
      REQUIRE(std::getline(fields, b_s, '\t'));
      CHECK(csv::parse_double(hi_s, "hist") > csv::parse_double(lo_s, "hist"));
      sum_a += std::stol(a_s);
      sum_b += std::stol(b_s);
      ++rows;
    }
    CHECK(rows == 10);
    CHECK(sum_a == 300);
    CHECK(sum_b == 200);
  }
  SECTION("the plot is a readable raster of the advertised size") {
    Image img = read_png(plot);
    CHECK(img.w == 640);
    CHECK(img.h == 360);
    CHECK(img.c == 3);
    // some pixels must be colored bars rather than background
    long colored = 0;
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        if (img.at(y, x, 0) < 0.95f && img.at(y, x, 1) < 0.95f) ++colored;
    CHECK(colored > 500);
  }
  SECTION("the returned table matches a direct construction") {
    auto direct = make_histograms({{"real", a}, {"generated", b}}, 10);
    CHECK(h.counts == direct.counts);
    CHECK(h.edges == direct.edges);
  }
}
