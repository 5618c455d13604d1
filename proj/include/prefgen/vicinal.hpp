#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "prefgen/common.hpp"

namespace prefgen {

// raised when a hard vicinity is empty for every (target, noise draw): the
// half-width kappa is too small for the label spacing
struct DegenerateVicinityError : Error {
  using Error::Error;
};

struct VicinalConfig {
  enum class Mode { hard, soft };
  Mode mode = Mode::hard;
  double sigma = 0.0;   // label-noise std, label units
  double kappa = 0.0;   // hard vicinity half-width, label units
  double c1 = 1.0;      // real-term constant
  double c2 = 1.0;      // fake-term constant
  double nu = 1.0;      // soft-weight decay
  int mc_samples = 1;   // draws approximating the expectation over the noise
  std::uint64_t seed = 0;

  void validate() const {
    if (sigma < 0.0) throw ConfigError("vicinal: sigma must be >= 0");
    if (mode == Mode::hard && kappa < 0.0) throw ConfigError("vicinal: kappa must be >= 0");
    if (!(c1 > 0.0 && c2 > 0.0)) throw ConfigError("vicinal: c1 and c2 must be positive");
    if (mode == Mode::soft && !(nu > 0.0)) throw ConfigError("vicinal: nu must be positive");
    if (mc_samples < 1) throw ConfigError("vicinal: mc_samples must be >= 1");
  }

  static VicinalConfig hard(double sigma, double kappa) {
    VicinalConfig v;
    v.mode = Mode::hard;
    v.sigma = sigma;
    v.kappa = kappa;
    return v;
  }
  // soft weights decay like a Gaussian with scale kappa: nu = 1/kappa^2
  static VicinalConfig soft_from_kappa(double sigma, double kappa) {
    if (!(kappa > 0.0)) throw ConfigError("vicinal: soft mode derives nu from a positive kappa");
    VicinalConfig v;
    v.mode = Mode::soft;
    v.sigma = sigma;
    v.kappa = kappa;
    v.nu = 1.0 / (kappa * kappa);
    return v;
  }
};

// hard-window weights: 1/N for the N labels within kappa of the target,
// 0 elsewhere; all-zero when the window is empty
inline std::vector<double> vicinity_weights(const std::vector<double>& labels, double target,
                                            double kappa) {
  std::vector<double> w(labels.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (std::abs(target - labels[i]) <= kappa) ++count;
  if (count == 0) return w;
  const double share = 1.0 / double(count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (std::abs(target - labels[i]) <= kappa) w[i] = share;
  return w;
}

// Gaussian weights exp(-nu (target-label)^2), normalized to sum to 1; the
// max is factored out so the sum cannot underflow to zero
inline std::vector<double> soft_vicinity_weights(const std::vector<double>& labels, double target,
                                                 double nu) {
  if (labels.empty()) throw DataError("soft_vicinity_weights: no labels");
  std::vector<double> w(labels.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double d = target - labels[i];
    w[i] = -nu * d * d;
    best = std::max(best, w[i]);
  }
  double sum = 0.0;
  for (auto& v : w) {
    v = std::exp(v - best);
    sum += v;
  }
  for (auto& v : w) v /= sum;
  return w;
}

namespace vicdetail {

constexpr double kProbFloor = 1e-7;  // D outputs clamped to (floor, 1-floor)

inline double clamp_prob(double d) {
  return std::min(1.0 - kProbFloor, std::max(kProbFloor, d));
}

inline void check_labels_01(const std::vector<double>& y, const char* what) {
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0))
      throw DataError(std::string(what) + ": labels must lie in [0,1], got " +
                      std::to_string(v));
}

// noise draws for each (target, mc sample); sigma 0 keeps them exactly zero
inline std::vector<std::vector<double>> draw_eps(std::size_t n_targets, const VicinalConfig& v) {
  std::vector<std::vector<double>> eps(n_targets, std::vector<double>(std::size_t(v.mc_samples), 0.0));
  if (v.sigma > 0.0) {
    Rng rng(stage_seed(v.seed, "vicinal-eps"));
    for (auto& row : eps)
      for (auto& e : row) e = rng.normal() * v.sigma;
  }
  return eps;
}

}  // namespace vicdetail

// discriminator loss with hard vicinity weighting: each noisy target collects
// the real images whose labels fall inside its window (each weighted 1/N) for
// the log D term and likewise fake images for the log(1-D) term
inline double hvdl_loss_with_eps(const std::vector<double>& d_real,
                                 const std::vector<double>& y_real,
                                 const std::vector<double>& d_fake,
                                 const std::vector<double>& y_fake,
                                 const std::vector<double>& targets,
                                 const std::vector<std::vector<double>>& eps,
                                 const VicinalConfig& vcfg) {
  vcfg.validate();
  if (vcfg.mode != VicinalConfig::Mode::hard) throw ConfigError("hvdl_loss: config not in hard mode");
  if (d_real.size() != y_real.size() || d_fake.size() != y_fake.size())
    throw ConfigError("hvdl_loss: outputs and labels must align");
  if (d_real.empty() || d_fake.empty() || targets.empty())
    throw ConfigError("hvdl_loss: empty batch");
  if (eps.size() != targets.size()) throw ConfigError("hvdl_loss: eps rows must match targets");
  vicdetail::check_labels_01(y_real, "hvdl_loss real");
  vicdetail::check_labels_01(y_fake, "hvdl_loss fake");
  vicdetail::check_labels_01(targets, "hvdl_loss targets");

  double real_acc = 0.0, fake_acc = 0.0;
  bool any_real = false, any_fake = false;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (eps[j].size() != std::size_t(vcfg.mc_samples))
      throw ConfigError("hvdl_loss: eps row length must equal mc_samples");
    for (double e : eps[j]) {
      const double t = targets[j] + e;
      auto wr = vicinity_weights(y_real, t, vcfg.kappa);
      auto wf = vicinity_weights(y_fake, t, vcfg.kappa);
      for (std::size_t i = 0; i < d_real.size(); ++i)
        if (wr[i] > 0.0) {
          any_real = true;
          real_acc += wr[i] * std::log(vicdetail::clamp_prob(d_real[i]));
        }
      for (std::size_t i = 0; i < d_fake.size(); ++i)
        if (wf[i] > 0.0) {
          any_fake = true;
          fake_acc += wf[i] * std::log1p(-vicdetail::clamp_prob(d_fake[i]));
        }
    }
  }
  if (!any_real || !any_fake)
    throw DegenerateVicinityError(
        "hvdl_loss: every vicinity is empty on the " + std::string(!any_real ? "real" : "fake") +
        " side; kappa is too small for the label spacing");
  const double mc = double(vcfg.mc_samples);
  return -vcfg.c1 / (double(d_real.size()) * mc) * real_acc -
         vcfg.c2 / (double(d_fake.size()) * mc) * fake_acc;
}

inline double hvdl_loss(const std::vector<double>& d_real, const std::vector<double>& y_real,
                        const std::vector<double>& d_fake, const std::vector<double>& y_fake,
                        const std::vector<double>& targets, const VicinalConfig& vcfg) {
  return hvdl_loss_with_eps(d_real, y_real, d_fake, y_fake, targets,
                            vicdetail::draw_eps(targets.size(), vcfg), vcfg);
}

// soft variant: normalized Gaussian weights replace the indicator window
inline double svdl_loss_with_eps(const std::vector<double>& d_real,
                                 const std::vector<double>& y_real,
                                 const std::vector<double>& d_fake,
                                 const std::vector<double>& y_fake,
                                 const std::vector<double>& targets,
                                 const std::vector<std::vector<double>>& eps,
                                 const VicinalConfig& vcfg) {
  vcfg.validate();
  if (vcfg.mode != VicinalConfig::Mode::soft) throw ConfigError("svdl_loss: config not in soft mode");
  if (d_real.size() != y_real.size() || d_fake.size() != y_fake.size())
    throw ConfigError("svdl_loss: outputs and labels must align");
  if (d_real.empty() || d_fake.empty() || targets.empty())
    throw ConfigError("svdl_loss: empty batch");
  if (eps.size() != targets.size()) throw ConfigError("svdl_loss: eps rows must match targets");
  vicdetail::check_labels_01(y_real, "svdl_loss real");
  vicdetail::check_labels_01(y_fake, "svdl_loss fake");
  vicdetail::check_labels_01(targets, "svdl_loss targets");

  double real_acc = 0.0, fake_acc = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (eps[j].size() != std::size_t(vcfg.mc_samples))
      throw ConfigError("svdl_loss: eps row length must equal mc_samples");
    for (double e : eps[j]) {
      const double t = targets[j] + e;
      auto wr = soft_vicinity_weights(y_real, t, vcfg.nu);
      auto wf = soft_vicinity_weights(y_fake, t, vcfg.nu);
      for (std::size_t i = 0; i < d_real.size(); ++i)
        real_acc += wr[i] * std::log(vicdetail::clamp_prob(d_real[i]));
      for (std::size_t i = 0; i < d_fake.size(); ++i)
        fake_acc += wf[i] * std::log1p(-vicdetail::clamp_prob(d_fake[i]));
    }
  }
  const double mc = double(vcfg.mc_samples);
  return -vcfg.c1 / (double(d_real.size()) * mc) * real_acc -
         vcfg.c2 / (double(d_fake.size()) * mc) * fake_acc;
}

inline double svdl_loss(const std::vector<double>& d_real, const std::vector<double>& y_real,
                        const std::vector<double>& d_fake, const std::vector<double>& y_fake,
                        const std::vector<double>& targets, const VicinalConfig& vcfg) {
  return svdl_loss_with_eps(d_real, y_real, d_fake, y_fake, targets,
                            vicdetail::draw_eps(targets.size(), vcfg), vcfg);
}

// generator objective on discriminator outputs for generated images whose
// labels already carry their noise perturbation
inline double generator_loss(const std::vector<double>& d_fake,
                             const std::vector<double>& y_fake, const VicinalConfig& vcfg) {
  vcfg.validate();
  if (d_fake.size() != y_fake.size()) throw ConfigError("generator_loss: outputs and labels must align");
  if (d_fake.empty()) throw ConfigError("generator_loss: empty batch");
  double acc = 0.0;
  for (double d : d_fake) acc += std::log(vicdetail::clamp_prob(d));
  return -acc / double(d_fake.size());
}

struct RuleOfThumb {
  double sigma = 0.0;
  double kappa = 0.0;
};

// bandwidth-style defaults for the vicinal parameters: sigma follows the
// Silverman rule with the label spread taken as the standard deviation of a
// uniform distribution over the observed range, and kappa scales the largest
// gap between adjacent distinct labels
inline RuleOfThumb rule_of_thumb_hyperparams(const std::vector<double>& normalized_labels,
                                             std::int64_t n_images, double kappa_scale = 5.0) {
  if (n_images < 1) throw ConfigError("rule_of_thumb: n_images must be >= 1");
  if (!(kappa_scale > 0.0)) throw ConfigError("rule_of_thumb: kappa_scale must be positive");
  std::set<double> distinct(normalized_labels.begin(), normalized_labels.end());
  if (distinct.size() < 2)
    throw DataError("rule_of_thumb: need at least 2 distinct labels, got " +
                    std::to_string(distinct.size()));
  const double lo = *distinct.begin(), hi = *distinct.rbegin();
  RuleOfThumb r;
  r.sigma = (hi - lo) / std::sqrt(12.0) * std::pow(4.0 / (3.0 * double(n_images)), 0.2);
  double max_gap = 0.0, prev = lo;
  for (double v : distinct) {
    max_gap = std::max(max_gap, v - prev);
    prev = v;
  }
  r.kappa = kappa_scale * max_gap;
  return r;
}

}  // namespace prefgen
