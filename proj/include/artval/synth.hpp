#pragma once

// Seeded synthetic auction panels with a known price decomposition, an image
// channel driven by a latent visual factor, presale estimates and bought-in
// lots.

#include "artval/core.hpp"
#include "artval/embed.hpp"
#include "artval/panel.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace artval::synth {

struct DGPConfig {
  int n_rows = 20000;  // transaction rows (sold and bought-in)
  double resale_prob = 0.6;
  double mean_gap_years = 5.0;
  int year_first = 1985;
  int year_last = 2024;

  double base_log_price = 11.6;
  int n_artists = 120;
  double artist_sd = 0.9;
  int n_houses = 6;
  double house_sd = 0.15;
  double trend_per_year = 0.02;

  double size_coef = 0.3;      // per sd of log area
  double medium_sd = 0.3;
  double shape_sd = 0.1;
  double citation_coef = 0.03;
  double exhibition_coef = 0.03;
  double signed_coef = 0.08;
  double dated_coef = 0.04;

  int visual_dim = 8;
  double beta_img = 0.3;          // sd of the visual price term
  double visual_interaction = 0;  // extra visual slope for the first medium level
  int distractor_dim = 8;
  int d_backbone = 64;
  double embed_noise = 0.3;

  double shock_sd = 0.25;  // persistent object shock, stationary sd
  double rho = 0.95;       // per-sale persistence of the object shock
  double noise_sd = 0.15;

  double est_noise_fresh = 0.25;
  double est_noise_prev = 0.15;
  double est_bias_fresh = 0.0;
  double est_bias_prev = 0.0;
  double est_attr_bias_sd = 0.0;  // predictable bias from observed attributes
  double est_attr_prev_mult = 1.0;
  double est_tail_shrink = 0.0;   // fresh lots beyond est_tail_start sd are pulled toward the center
  double est_tail_start = 1.0;
  double est_spread = 0.2;  // half-width of the log estimate range

  double unsold_intercept = -1.0;  // logit scale
  double unsold_gap_coef = 3.0;    // on log(mid) - value

  std::uint64_t seed = 0;

  void validate() const {
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    require(n_rows > 0 && n_artists > 0 && n_houses > 0, ErrorKind::invalid_argument,
            "synth: counts must be positive");
    require(prob(resale_prob) && std::abs(rho) <= 1, ErrorKind::invalid_argument,
            "synth: resale_prob and rho must be probabilities");
    require(year_last >= year_first, ErrorKind::invalid_argument, "synth: empty year range");
    require(noise_sd > 0 || artist_sd > 0 || beta_img > 0, ErrorKind::invalid_argument,
            "synth: degenerate config (zero price variance)");
    require(visual_dim > 0 && d_backbone > 0 && distractor_dim >= 0, ErrorKind::invalid_argument,
            "synth: visual and embedding dimensions must be positive");
    for (double v : {artist_sd, house_sd, medium_sd, shape_sd, beta_img, shock_sd, noise_sd, est_noise_fresh,
                     est_noise_prev, est_attr_bias_sd, embed_noise, est_spread, mean_gap_years})
      require(std::isfinite(v) && v >= 0, ErrorKind::invalid_argument, "synth: scale parameters must be finite and >= 0");
    for (double v : {trend_per_year, size_coef, citation_coef, exhibition_coef, signed_coef, dated_coef,
                     visual_interaction, est_bias_fresh, est_bias_prev, est_tail_shrink, unsold_intercept,
                     unsold_gap_coef, base_log_price})
      require(std::isfinite(v), ErrorKind::invalid_argument, "synth: effect sizes must be finite");
  }

  nlohmann::json to_json() const {
    return {{"n_rows", n_rows}, {"resale_prob", resale_prob}, {"mean_gap_years", mean_gap_years},
            {"year_first", year_first}, {"year_last", year_last}, {"base_log_price", base_log_price},
            {"n_artists", n_artists}, {"artist_sd", artist_sd}, {"n_houses", n_houses}, {"house_sd", house_sd},
            {"trend_per_year", trend_per_year}, {"size_coef", size_coef}, {"medium_sd", medium_sd},
            {"shape_sd", shape_sd}, {"citation_coef", citation_coef}, {"exhibition_coef", exhibition_coef},
            {"signed_coef", signed_coef}, {"dated_coef", dated_coef}, {"visual_dim", visual_dim},
            {"beta_img", beta_img}, {"visual_interaction", visual_interaction},
            {"distractor_dim", distractor_dim}, {"d_backbone", d_backbone}, {"embed_noise", embed_noise},
            {"shock_sd", shock_sd}, {"rho", rho}, {"noise_sd", noise_sd},
            {"est_noise_fresh", est_noise_fresh}, {"est_noise_prev", est_noise_prev},
            {"est_bias_fresh", est_bias_fresh}, {"est_bias_prev", est_bias_prev},
            {"est_attr_bias_sd", est_attr_bias_sd}, {"est_attr_prev_mult", est_attr_prev_mult},
            {"est_tail_shrink", est_tail_shrink}, {"est_tail_start", est_tail_start},
            {"est_spread", est_spread}, {"unsold_intercept", unsold_intercept},
            {"unsold_gap_coef", unsold_gap_coef}, {"seed", seed}};
  }
};

// Named parameter sets used by the acceptance suite and the CLI.
inline DGPConfig preset(const std::string& name, std::uint64_t seed = 0) {
  DGPConfig c;
  c.seed = seed;
  if (name == "anchored") return c;
  if (name == "small") {
    // fewer rows, for sweeps over wide projections
    c.n_rows = 4000;
    c.n_artists = 30;
    c.d_backbone = 256;
    c.distractor_dim = 32;
    return c;
  }
  if (name == "estimation_error") {
    c.n_rows = 12000;
    c.est_noise_fresh = 0.3;
    c.est_noise_prev = 0.2;
    c.est_attr_bias_sd = 0.14;
    c.est_attr_prev_mult = 0.5;
    return c;
  }
  if (name == "tail_biased") {
    c.est_attr_bias_sd = 0.15;
    c.est_noise_fresh = 0.15;
    c.est_noise_prev = 0.1;
    c.est_tail_shrink = 0.3;
    c.est_tail_start = 1.0;
    return c;
  }
  if (name == "classification") {
    c.n_rows = 12000;
    c.n_artists = 60;
    c.unsold_intercept = -1.0;
    c.unsold_gap_coef = 8.0;
    c.est_noise_fresh = 0.3;
    c.est_noise_prev = 0.25;
    return c;
  }
  if (name == "no_visual") {
    c.beta_img = 0.0;
    return c;
  }
  fail(ErrorKind::invalid_argument, "unknown synth preset '" + name + "'");
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> n = {"anchored", "small", "estimation_error", "tail_biased",
                                             "classification", "no_visual"};
  return n;
}

// Per-row components of the simulated log value.
struct RowTruth {
  std::string lot_id;
  std::string object_id;
  double value = 0;  // log value before sale noise
  double artist = 0, object = 0, visual = 0, trend = 0, house = 0, shock = 0, noise = 0;
  double estimate_bias = 0;      // systematic part of log(mid) - value
  double estimate_attr_bias = 0; // predictable from observed attributes
  double estimate_noise = 0;
  double p_unsold = 0;
};

struct Dataset {
  std::vector<panel::TransactionRecord> records;
  embed::EmbeddingTable embeddings;
  std::vector<RowTruth> truth;  // parallel to records
};

namespace detail {

inline const std::array<const char*, 6>& mediums() {
  static const std::array<const char*, 6> m = {"oil", "acrylic", "works_on_paper", "print", "sculpture", "photograph"};
  return m;
}
inline const std::array<const char*, 4>& categories() {
  static const std::array<const char*, 4> c = {"impressionist", "modern", "postwar", "contemporary"};
  return c;
}
inline const std::array<const char*, 3>& shapes() {
  static const std::array<const char*, 3> s = {"landscape", "portrait", "square"};
  return s;
}
inline const std::array<const char*, 3>& cities() {
  static const std::array<const char*, 3> c = {"new_york", "london", "paris"};
  return c;
}

inline std::string pad(int k, int width) {
  std::string s = std::to_string(k);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

// Index drawn with probability proportional to weights.
inline std::size_t draw(Rng& rng, const std::vector<double>& cum) {
  const double u = uniform01(rng) * cum.back();
  return static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

inline std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = s += w[i];
  return c;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

inline Dataset generate(const DGPConfig& cfg) {
  cfg.validate();
  namespace d = detail;
  Rng g(mix_seed(cfg.seed, 0x5EED));

  // Market-level structure shared by all objects.
  std::vector<double> artist_effect(static_cast<std::size_t>(cfg.n_artists));
  std::vector<int> artist_category(artist_effect.size());
  std::vector<double> artist_weight(artist_effect.size());
  for (std::size_t a = 0; a < artist_effect.size(); ++a) {
    artist_effect[a] = cfg.artist_sd * normal01(g);
    artist_category[a] = static_cast<int>(uniform_index(g, d::categories().size()));
    artist_weight[a] = 1.0 / (static_cast<double>(a) + 0.25 * cfg.n_artists);
  }
  const auto artist_cum = d::cumulative(artist_weight);
  std::vector<double> house_effect(static_cast<std::size_t>(cfg.n_houses));
  std::vector<double> house_weight(house_effect.size());
  for (std::size_t h = 0; h < house_effect.size(); ++h) {
    house_effect[h] = cfg.house_sd * normal01(g);
    house_weight[h] = 1.0 / (static_cast<double>(h) + 2.0);
  }
  const auto house_cum = d::cumulative(house_weight);
  const std::vector<double> medium_weight = {0.35, 0.15, 0.2, 0.1, 0.1, 0.1};
  const auto medium_cum = d::cumulative(medium_weight);
  std::vector<double> medium_effect, shape_effect, category_est_bias, medium_est_bias;
  for (std::size_t m = 0; m < d::mediums().size(); ++m) medium_effect.push_back(cfg.medium_sd * normal01(g));
  for (std::size_t s = 0; s < d::shapes().size(); ++s) shape_effect.push_back(cfg.shape_sd * normal01(g));
  // Attribute-driven estimate bias: three parts of roughly equal variance, unit total.
  const double third = 1.0 / std::sqrt(3.0);
  for (std::size_t c = 0; c < d::categories().size(); ++c) category_est_bias.push_back(third * normal01(g));
  for (std::size_t m = 0; m < d::mediums().size(); ++m) medium_est_bias.push_back(third * normal01(g));
  const double citation_est_coef = third * (normal01(g) < 0 ? -1.0 : 1.0) / std::sqrt(2.0);

  Vector visual_w(cfg.visual_dim);
  for (int k = 0; k < cfg.visual_dim; ++k) visual_w(k) = normal01(g);
  visual_w.normalize();

  // Image features: visual factor, medium and shape indicators, log size and
  // price-irrelevant distractors, mixed by a fixed random map.
  const int n_latent = cfg.visual_dim + static_cast<int>(d::mediums().size() + d::shapes().size()) + 2 +
                       cfg.distractor_dim;
  Matrix mix(cfg.d_backbone, n_latent);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = normal01(g) / std::sqrt(static_cast<double>(n_latent));

  Dataset out;
  out.embeddings = embed::EmbeddingTable(cfg.d_backbone, "synthetic");
  const int years = cfg.year_last - cfg.year_first + 1;
  const double center = cfg.base_log_price;
  const double value_sd = std::sqrt(cfg.artist_sd * cfg.artist_sd + cfg.beta_img * cfg.beta_img +
                                    cfg.shock_sd * cfg.shock_sd + cfg.medium_sd * cfg.medium_sd +
                                    cfg.size_coef * cfg.size_coef + 1e-12);

  int object = 0;
  while (static_cast<int>(out.records.size()) < cfg.n_rows) {
    Rng r(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(object)));
    const std::string object_id = "obj" + d::pad(object, 6);
    ++object;

    const auto artist = d::draw(r, artist_cum);
    const auto medium = d::draw(r, medium_cum);
    const double log_h = std::log(60.0) + 0.45 * normal01(r);
    const double log_w = log_h + 0.25 * normal01(r);
    const double aspect = std::exp(log_h - log_w);
    const std::size_t shape = aspect > 1.15 ? 1 : (aspect < 0.87 ? 0 : 2);
    const int n_cit = poisson(r, 2.0);
    const int n_exh = poisson(r, 1.5);
    const bool is_signed = bernoulli(r, 0.7);
    const bool is_dated = bernoulli(r, 0.5);
    Vector v(cfg.visual_dim);
    for (int k = 0; k < cfg.visual_dim; ++k) v(k) = normal01(r);
    Vector distract(cfg.distractor_dim);
    for (int k = 0; k < cfg.distractor_dim; ++k) distract(k) = normal01(r);

    const double size_z = ((log_h + log_w) - 2 * std::log(60.0)) / std::sqrt(0.45 * 0.45 * 4 + 0.25 * 0.25);
    const double object_effect = cfg.size_coef * size_z + medium_effect[medium] + shape_effect[shape] +
                                 cfg.citation_coef * (n_cit - 2.0) + cfg.exhibition_coef * (n_exh - 1.5) +
                                 cfg.signed_coef * (is_signed ? 0.5 : -0.5) + cfg.dated_coef * (is_dated ? 0.5 : -0.5);
    const double vis_index = visual_w.dot(v);
    const double visual_effect = cfg.beta_img * vis_index + (medium == 0 ? cfg.visual_interaction * vis_index : 0.0);
    const double attr_bias = category_est_bias[static_cast<std::size_t>(artist_category[artist])] +
                             medium_est_bias[medium] + citation_est_coef * (n_cit - 2.0);

    Vector z(n_latent);
    z.setZero();
    int o = 0;
    z.segment(o, cfg.visual_dim) = v;
    o += cfg.visual_dim;
    z(o + static_cast<int>(medium)) = 1.0;
    o += static_cast<int>(d::mediums().size());
    z(o + static_cast<int>(shape)) = 1.0;
    o += static_cast<int>(d::shapes().size());
    z(o++) = (log_h - std::log(60.0)) / 0.45;
    z(o++) = (log_w - std::log(60.0)) / 0.5;
    z.segment(o, cfg.distractor_dim) = distract;
    Vector e = mix * z;
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) += cfg.embed_noise * normal01(r);
    std::vector<float> emb(static_cast<std::size_t>(e.size()));
    for (Eigen::Index k = 0; k < e.size(); ++k) emb[static_cast<std::size_t>(k)] = static_cast<float>(e(k));

    double shock = cfg.shock_sd * normal01(r);
    int year = cfg.year_first + static_cast<int>(uniform_index(r, static_cast<std::size_t>(years)));
    int sale = 0;
    while (year <= cfg.year_last && static_cast<int>(out.records.size()) < cfg.n_rows) {
      if (sale > 0) shock = cfg.rho * shock + std::sqrt(1.0 - cfg.rho * cfg.rho) * cfg.shock_sd * normal01(r);
      const auto house = d::draw(r, house_cum);
      const int month = 1 + static_cast<int>(uniform_index(r, 12));
      const double trend = cfg.trend_per_year * (year - 2000) + 0.1 * std::sin(year / 4.0);
      const double value = cfg.base_log_price + artist_effect[artist] + object_effect + visual_effect + trend +
                           house_effect[house] + shock;
      const bool fresh = sale == 0;

      double bias = fresh ? cfg.est_bias_fresh : cfg.est_bias_prev;
      const double dev = (value - trend - center) / value_sd;
      if (fresh && std::abs(dev) > cfg.est_tail_start)
        bias -= cfg.est_tail_shrink * (dev - std::copysign(cfg.est_tail_start, dev)) * value_sd;
      const double ab = cfg.est_attr_bias_sd * attr_bias * (fresh ? 1.0 : cfg.est_attr_prev_mult);
      const double en = (fresh ? cfg.est_noise_fresh : cfg.est_noise_prev) * normal01(r);
      const double log_mid = value + bias + ab + en;
      const double half = cfg.est_spread * (0.8 + 0.4 * uniform01(r));
      const double p_unsold = d::sigmoid(cfg.unsold_intercept + cfg.unsold_gap_coef * (log_mid - value));
      const bool sold = !bernoulli(r, p_unsold);
      const double eps = cfg.noise_sd * normal01(r);

      panel::TransactionRecord rec;
      rec.lot_id = "lot" + d::pad(static_cast<int>(out.records.size()), 7);
      rec.object_id = object_id;
      rec.sold = sold;
      if (sold) rec.price = std::exp(value + eps);
      // Estimates are published rounded to whole currency units.
      rec.estimate_low = std::round(std::exp(log_mid - half));
      rec.estimate_high = std::round(std::exp(log_mid + half));
      rec.sale_year = year;
      rec.sale_month = month;
      rec.artist = "artist" + d::pad(static_cast<int>(artist), 3);
      rec.house = "house" + std::to_string(house);
      rec.location = d::cities()[house % d::cities().size()];
      rec.category = d::categories()[static_cast<std::size_t>(artist_category[artist])];
      rec.medium = d::mediums()[medium];
      rec.height = std::round(std::exp(log_h) * 10.0) / 10.0;
      rec.width = std::round(std::exp(log_w) * 10.0) / 10.0;
      rec.shape = d::shapes()[shape];
      rec.signed_ = is_signed;
      rec.dated = is_dated;
      rec.n_exhibitions = n_exh;
      rec.n_citations = n_cit;
      rec.image_ref = "images/" + rec.lot_id + ".jpg";
      out.embeddings.add(rec.lot_id, emb);

      RowTruth t;
      t.lot_id = rec.lot_id;
      t.object_id = object_id;
      t.value = value;
      t.artist = artist_effect[artist];
      t.object = object_effect;
      t.visual = visual_effect;
      t.trend = trend;
      t.house = house_effect[house];
      t.shock = shock;
      t.noise = sold ? eps : 0.0;
      t.estimate_bias = bias;
      t.estimate_attr_bias = ab;
      t.estimate_noise = en;
      t.p_unsold = p_unsold;
      out.records.push_back(std::move(rec));
      out.truth.push_back(t);

      ++sale;
      if (!bernoulli(r, cfg.resale_prob)) break;
      year += 1 + poisson(r, std::max(0.0, cfg.mean_gap_years - 1.0));
    }
  }
  return out;
}

inline std::string truth_csv(const std::vector<RowTruth>& truth) {
  csv::Writer w({"lot_id", "object_id", "value", "artist", "object", "visual", "trend", "house", "shock", "noise",
                 "estimate_bias", "estimate_attr_bias", "estimate_noise", "p_unsold"});
  for (const auto& t : truth)
    w.row({t.lot_id, t.object_id, csv::format_number(t.value), csv::format_number(t.artist),
           csv::format_number(t.object), csv::format_number(t.visual), csv::format_number(t.trend),
           csv::format_number(t.house), csv::format_number(t.shock), csv::format_number(t.noise),
           csv::format_number(t.estimate_bias), csv::format_number(t.estimate_attr_bias),
           csv::format_number(t.estimate_noise), csv::format_number(t.p_unsold)});
  return w.str();
}

}  // namespace artval::synth
