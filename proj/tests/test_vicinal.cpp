#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prefgen/vicinal.hpp"

using namespace prefgen;

namespace {

std::vector<double> rand_probs(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(0.02, 0.98);
  return v;
}

std::vector<double> rand_labels(std::size_t n, Rng& rng, int n_distinct) {
  std::vector<double> grid(static_cast<std::size_t>(n_distinct));
  for (int i = 0; i < n_distinct; ++i) grid[std::size_t(i)] = rng.uniform();
  std::vector<double> v(n);
  for (auto& x : v) x = grid[std::size_t(rng.uniform_int(0, n_distinct - 1))];
  return v;
}

// independent translation of the loss definition: plain triple loop over
// (target, noise draw, image), no shared code with the implementation
double loop_oracle(const std::vector<double>& d_real, const std::vector<double>& y_real,
                   const std::vector<double>& d_fake, const std::vector<double>& y_fake,
                   const std::vector<double>& targets,
                   const std::vector<std::vector<double>>& eps, const VicinalConfig& v,
                   bool hard) {
  auto clamp = [](double d) { return std::min(1.0 - 1e-7, std::max(1e-7, d)); };
  double real_term = 0.0, fake_term = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j)
    for (double e : eps[j]) {
      const double t = targets[j] + e;
      if (hard) {
        int nr = 0, nf = 0;
        for (double y : y_real) nr += std::abs(t - y) <= v.kappa;
        for (double y : y_fake) nf += std::abs(t - y) <= v.kappa;
        if (nr > 0)
          for (std::size_t i = 0; i < y_real.size(); ++i)
            if (std::abs(t - y_real[i]) <= v.kappa)
              real_term += std::log(clamp(d_real[i])) / nr;
        if (nf > 0)
          for (std::size_t i = 0; i < y_fake.size(); ++i)
            if (std::abs(t - y_fake[i]) <= v.kappa)
              fake_term += std::log(1.0 - clamp(d_fake[i])) / nf;
      } else {
        double zr = 0.0, zf = 0.0;
        for (double y : y_real) zr += std::exp(-v.nu * (t - y) * (t - y));
        for (double y : y_fake) zf += std::exp(-v.nu * (t - y) * (t - y));
        for (std::size_t i = 0; i < y_real.size(); ++i)
          real_term += std::exp(-v.nu * (t - y_real[i]) * (t - y_real[i])) / zr *
                       std::log(clamp(d_real[i]));
        for (std::size_t i = 0; i < y_fake.size(); ++i)
          fake_term += std::exp(-v.nu * (t - y_fake[i]) * (t - y_fake[i])) / zf *
                       std::log(1.0 - clamp(d_fake[i]));
      }
    }
  const double mc = double(v.mc_samples);
  return -v.c1 / (double(d_real.size()) * mc) * real_term -
         v.c2 / (double(d_fake.size()) * mc) * fake_term;
}

}  // namespace

TEST_CASE("vicinity weights sum to one whenever nonempty") {
  Rng rng(500);
  int nonempty_seen = 0, empty_seen = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = int(rng.uniform_int(1, 40));
    std::vector<double> labels(static_cast<std::size_t>(n));
    for (auto& v : labels) v = rng.uniform();
    const double kappa = rng.uniform() * 0.2;
    const double target = rng.uniform(-0.1, 1.1);  // noise can leave [0,1]
    auto w = vicinity_weights(labels, target, kappa);
    double sum = 0.0;
    int inside = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum += w[i];
      if (std::abs(target - labels[i]) <= kappa) {
        CHECK(w[i] > 0.0);
        ++inside;
      } else {
        CHECK(w[i] == 0.0);
      }
    }
    if (inside > 0) {
      CHECK(sum == Catch::Approx(1.0).margin(1e-12));
      ++nonempty_seen;
    } else {
      CHECK(sum == 0.0);
      ++empty_seen;
    }
  }
  CHECK(nonempty_seen > 0);
  CHECK(empty_seen > 0);  // both regimes exercised

  // soft weights always sum to one, even far from every label
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = int(rng.uniform_int(1, 40));
    std::vector<double> labels(static_cast<std::size_t>(n));
    for (auto& v : labels) v = rng.uniform();
    const double nu = rng.uniform(0.1, 1e6);
    auto w = soft_vicinity_weights(labels, rng.uniform(-1.0, 2.0), nu);
    double sum = 0.0;
    for (double x : w) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("hard loss collapses to the unconditional loss when labels coincide") {
  Rng rng(501);
  auto d_real = rand_probs(12, rng);
  auto d_fake = rand_probs(12, rng);
  std::vector<double> same(12, 0.7);
  auto v = VicinalConfig::hard(0.0, 0.0);

  double loss = hvdl_loss(d_real, same, d_fake, same, same, v);
  double expect = 0.0;
  for (double d : d_real) expect -= std::log(d) / 12.0;
  for (double d : d_fake) expect -= std::log(1.0 - d) / 12.0;
  CHECK(loss == Catch::Approx(expect).margin(1e-6));

  auto vs = VicinalConfig::soft_from_kappa(0.0, 0.3);
  double soft = svdl_loss(d_real, same, d_fake, same, same, vs);
  CHECK(soft == Catch::Approx(expect).margin(1e-6));
}

TEST_CASE("hard vicinity selects exactly the in-window image") {
  std::vector<double> d_real = {0.8, 0.3};
  std::vector<double> y_real = {0.0, 1.0};
  std::vector<double> d_fake = {0.2, 0.6};
  std::vector<double> y_fake = {0.0, 1.0};
  std::vector<double> target = {0.0};
  auto v = VicinalConfig::hard(0.0, 0.5);

  // target 0 with half-width 0.5: only the label-0 entries are in view,
  // each with weight 1
  double loss = hvdl_loss(d_real, y_real, d_fake, y_fake, target, v);
  double expect = -std::log(0.8) / 2.0 - std::log(1.0 - 0.2) / 2.0;
  CHECK(loss == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("hard loss matches the explicit loop oracle") {
  Rng rng(502);
  for (int rep = 0; rep < 20; ++rep) {
    auto y_real = rand_labels(16, rng, 5);
    auto y_fake = rand_labels(16, rng, 5);
    auto d_real = rand_probs(16, rng);
    auto d_fake = rand_probs(16, rng);
    auto targets = rand_labels(16, rng, 5);
    auto v = VicinalConfig::hard(0.05, 0.3);
    v.c1 = 1.3;
    v.c2 = 0.8;
    v.mc_samples = 3;
    std::vector<std::vector<double>> eps(targets.size(), std::vector<double>(3));
    for (auto& row : eps)
      for (auto& e : row) e = rng.normal() * v.sigma;
    double a = hvdl_loss_with_eps(d_real, y_real, d_fake, y_fake, targets, eps, v);
    double b = loop_oracle(d_real, y_real, d_fake, y_fake, targets, eps, v, true);
    CHECK(a == Catch::Approx(b).margin(1e-9));
  }
}

TEST_CASE("soft loss matches the explicit loop oracle") {
  Rng rng(503);
  for (int rep = 0; rep < 20; ++rep) {
    auto y_real = rand_labels(16, rng, 5);
    auto y_fake = rand_labels(16, rng, 5);
    auto d_real = rand_probs(16, rng);
    auto d_fake = rand_probs(16, rng);
    auto targets = rand_labels(16, rng, 5);
    auto v = VicinalConfig::soft_from_kappa(0.05, 0.2);
    v.c1 = 0.9;
    v.c2 = 1.6;
    v.mc_samples = 2;
    std::vector<std::vector<double>> eps(targets.size(), std::vector<double>(2));
    for (auto& row : eps)
      for (auto& e : row) e = rng.normal() * v.sigma;
    double a = svdl_loss_with_eps(d_real, y_real, d_fake, y_fake, targets, eps, v);
    double b = loop_oracle(d_real, y_real, d_fake, y_fake, targets, eps, v, false);
    CHECK(a == Catch::Approx(b).margin(1e-9));
  }
}

TEST_CASE("soft weights approach the nearest-label indicator as nu grows") {
  std::vector<double> labels = {0.1, 0.4, 0.7, 1.0};
  auto w = soft_vicinity_weights(labels, 0.38, 1e8);
  CHECK(w[1] > 1.0 - 1e-6);  // 0.4 is nearest
  CHECK(w[0] < 1e-6);
  CHECK(w[2] < 1e-6);
  CHECK(w[3] < 1e-6);
}

TEST_CASE("degenerate vicinity raises a dedicated error") {
  std::vector<double> d = {0.5};
  std::vector<double> y_real = {0.0};
  std::vector<double> y_fake = {0.0};
  std::vector<double> far_target = {1.0};
  auto v = VicinalConfig::hard(0.0, 0.01);
  CHECK_THROWS_AS(hvdl_loss(d, y_real, d, y_fake, far_target, v), DegenerateVicinityError);

  // nonempty on one side only still signals degeneracy
  std::vector<double> y_fake_near = {1.0};
  CHECK_THROWS_AS(hvdl_loss(d, y_real, d, y_fake_near, far_target, v),
                  DegenerateVicinityError);

  // soft mode has no empty vicinities
  auto vs = VicinalConfig::soft_from_kappa(0.0, 0.01);
  CHECK(std::isfinite(svdl_loss(d, y_real, d, y_fake, far_target, vs)));
}

TEST_CASE("losses stay finite at extreme discriminator outputs") {
  std::vector<double> d_real = {0.0, 1.0};
  std::vector<double> d_fake = {1.0, 0.0};
  std::vector<double> y(2, 0.5);
  auto v = VicinalConfig::hard(0.0, 0.0);
  CHECK(std::isfinite(hvdl_loss(d_real, y, d_fake, y, y, v)));
  auto vs = VicinalConfig::soft_from_kappa(0.0, 0.1);
  CHECK(std::isfinite(svdl_loss(d_real, y, d_fake, y, y, vs)));
  CHECK(std::isfinite(generator_loss(d_real, y, v)));
}

TEST_CASE("generator loss on fixed discriminator outputs") {
  auto v = VicinalConfig::hard(0.0, 0.1);
  std::vector<double> labels = {0.2, 0.9, 0.5};

  std::vector<double> all_one(3, 1.0 - 1e-9);
  CHECK(generator_loss(all_one, labels, v) == Catch::Approx(0.0).margin(1e-6));

  std::vector<double> inv_e(3, std::exp(-1.0));
  CHECK(generator_loss(inv_e, labels, v) == Catch::Approx(1.0).margin(1e-9));

  Rng rng(504);
  auto d = rand_probs(9, rng);
  auto y = rand_labels(9, rng, 4);
  double expect = 0.0;
  for (double x : d) expect -= std::log(x) / 9.0;
  CHECK(generator_loss(d, y, v) == Catch::Approx(expect).margin(1e-12));

  CHECK_THROWS_AS(generator_loss({0.5}, labels, v), ConfigError);
  CHECK_THROWS_AS(generator_loss({}, {}, v), ConfigError);
}

TEST_CASE("loss input validation") {
  std::vector<double> d = {0.5, 0.5};
  std::vector<double> y = {0.3, 0.6};
  auto v = VicinalConfig::hard(0.0, 1.0);

  CHECK_THROWS_AS(hvdl_loss(d, {0.3}, d, y, y, v), ConfigError);
  CHECK_THROWS_AS(hvdl_loss(d, {0.3, 1.4}, d, y, y, v), DataError);
  auto soft_cfg = VicinalConfig::soft_from_kappa(0.0, 0.1);
  CHECK_THROWS_AS(hvdl_loss(d, y, d, y, y, soft_cfg), ConfigError);
  CHECK_THROWS_AS(svdl_loss(d, y, d, y, y, v), ConfigError);

  VicinalConfig bad = v;
  bad.c1 = 0.0;
  CHECK_THROWS_AS(hvdl_loss(d, y, d, y, y, bad), ConfigError);
  bad = v;
  bad.mc_samples = 0;
  CHECK_THROWS_AS(hvdl_loss(d, y, d, y, y, bad), ConfigError);
  bad = soft_cfg;
  bad.nu = 0.0;
  CHECK_THROWS_AS(svdl_loss(d, y, d, y, y, bad), ConfigError);
}

TEST_CASE("rule of thumb reproduces the anchored hyperparameter pairs") {
  // 11 evenly spaced labels on [0.6154, 1], 1317 training images
  std::vector<double> labels1(11);
  for (int i = 0; i < 11; ++i) labels1[std::size_t(i)] = 0.6154 + i * (1.0 - 0.6154) / 10.0;
  auto r1 = rule_of_thumb_hyperparams(labels1, 1317);
  CHECK(r1.sigma == Catch::Approx(0.028).margin(1e-3));
  CHECK(r1.kappa == Catch::Approx(0.192).margin(1e-3));

  // 10 evenly spaced labels on [0.7429, 1], 1283 training images
  std::vector<double> labels2(10);
  for (int i = 0; i < 10; ++i) labels2[std::size_t(i)] = 0.7429 + i * (1.0 - 0.7429) / 9.0;
  auto r2 = rule_of_thumb_hyperparams(labels2, 1283);
  CHECK(r2.sigma == Catch::Approx(0.019).margin(1e-3));
  CHECK(r2.kappa == Catch::Approx(0.143).margin(1e-3));

  // duplicated label values do not change the result
  auto dup = labels1;
  dup.insert(dup.end(), labels1.begin(), labels1.end());
  auto r3 = rule_of_thumb_hyperparams(dup, 1317);
  CHECK(r3.sigma == r1.sigma);
  CHECK(r3.kappa == r1.kappa);
}

TEST_CASE("rule of thumb scaling properties") {
  std::vector<double> labels = {0.2, 0.5, 0.6, 1.0};
  auto r = rule_of_thumb_hyperparams(labels, 500);
  CHECK(r.kappa == Catch::Approx(5.0 * 0.4).margin(1e-12));  // widest gap 0.6 -> 1.0

  // halving every gap halves kappa
  std::vector<double> squeezed;
  for (double v : labels) squeezed.push_back(0.2 + (v - 0.2) * 0.5);
  auto rs = rule_of_thumb_hyperparams(squeezed, 500);
  CHECK(rs.kappa == Catch::Approx(r.kappa * 0.5).margin(1e-12));
  CHECK(rs.sigma == Catch::Approx(r.sigma * 0.5).margin(1e-12));

  // the scale factor is configurable
  auto r10 = rule_of_thumb_hyperparams(labels, 500, 10.0);
  CHECK(r10.kappa == Catch::Approx(2.0 * r.kappa).margin(1e-12));

  // more images shrink sigma, kappa unchanged
  auto rbig = rule_of_thumb_hyperparams(labels, 5000);
  CHECK(rbig.sigma < r.sigma);
  CHECK(rbig.kappa == r.kappa);

  CHECK_THROWS_AS(rule_of_thumb_hyperparams({0.5, 0.5, 0.5}, 100), DataError);
  CHECK_THROWS_AS(rule_of_thumb_hyperparams(labels, 0), ConfigError);
  CHECK_THROWS_AS(rule_of_thumb_hyperparams(labels, 100, 0.0), ConfigError);
}
