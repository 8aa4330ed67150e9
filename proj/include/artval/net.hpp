#pragma once

// Two-branch valuation network: tabular projection and image projection,
// concatenated and layer-normalized, followed by a fully connected head.
// Dropping the image branch gives the tabular-only network with the same head.

#include "artval/core.hpp"
#include "artval/layers.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace artval::nn {

enum class Task { regression, classification };
enum class LossKind { mse_logprice, bce };

struct NetConfig {
  int n_feature = 0;
  int d_backbone = 0;  // 0 disables the image branch
  int d_image = 100;
  int d_tabular = 100;
  double dropout_p = 0.3;
  double input_dropout_p = 0.0;
  Task task = Task::regression;
  std::uint64_t seed = 0;

  bool has_image() const { return d_backbone > 0 && d_image > 0; }
  int fused_dim() const { return d_tabular + (has_image() ? d_image : 0); }

  nlohmann::json to_json() const {
    return {{"n_feature", n_feature}, {"d_backbone", d_backbone},   {"d_image", d_image},
            {"d_tabular", d_tabular}, {"dropout_p", dropout_p},     {"input_dropout_p", input_dropout_p},
            {"task", task == Task::regression ? "regression" : "classification"},
            {"seed", seed}};
  }
  static NetConfig from_json(const nlohmann::json& j) {
    NetConfig c;
    c.n_feature = j.at("n_feature").get<int>();
    c.d_backbone = j.at("d_backbone").get<int>();
    c.d_image = j.at("d_image").get<int>();
    c.d_tabular = j.at("d_tabular").get<int>();
    c.dropout_p = j.at("dropout_p").get<double>();
    c.input_dropout_p = j.at("input_dropout_p").get<double>();
    c.task = j.at("task").get<std::string>() == "regression" ? Task::regression : Task::classification;
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

template <class S>
struct FusedEmbedding {
  Mat<S> fused;  // fused_dim x n, post-LayerNorm
  Mat<S> image;  // d_image x n; empty without an image branch
};

template <class S>
class MultiModalNet {
 public:
  MultiModalNet() = default;

  explicit MultiModalNet(const NetConfig& cfg) : cfg_(cfg) {
    require(cfg.n_feature > 0 && cfg.d_tabular > 0, ErrorKind::invalid_argument,
            "net: n_feature and d_tabular must be positive");
    Rng rng(mix_seed(cfg.seed, 0x4E37));
    tabular_ = LayerStack<S>("tabular");
    if (cfg.input_dropout_p > 0) tabular_.add(Dropout<S>(cfg.n_feature, cfg.input_dropout_p));
    tabular_.add(Affine<S>(cfg.n_feature, cfg.d_tabular, rng)).add(ReLU<S>(cfg.d_tabular));
    if (cfg.has_image()) {
      image_ = LayerStack<S>("image");
      image_.add(Affine<S>(cfg.d_backbone, cfg.d_image, rng));
    }
    fusion_ = LayerStack<S>("fusion");
    fusion_.add(LayerNorm<S>(cfg.fused_dim()));
    head_ = LayerStack<S>("head");
    const int f = cfg.fused_dim();
    if (cfg.task == Task::regression) {
      head_.add(Affine<S>(f, 128, rng)).add(BatchNorm<S>(128)).add(ReLU<S>(128)).add(Dropout<S>(128, cfg.dropout_p));
      head_.add(Affine<S>(128, 64, rng)).add(BatchNorm<S>(64)).add(ReLU<S>(64));
      head_.add(Affine<S>(64, 32, rng)).add(BatchNorm<S>(32)).add(ReLU<S>(32));
      head_.add(Affine<S>(32, 1, rng));
    } else {
      head_.add(Affine<S>(f, 32, rng)).add(BatchNorm<S>(32)).add(ReLU<S>(32)).add(Dropout<S>(32, cfg.dropout_p));
      head_.add(Affine<S>(32, 1, rng));
    }
  }

  const NetConfig& config() const { return cfg_; }

  // Raw output (1 x B): normalized log price or logit.
  Mat<S> forward(const Mat<S>& tab, const Mat<S>* img, const ForwardContext& ctx) {
    const Mat<S> t = tabular_.forward(tab, ctx);
    Mat<S> fused_in;
    if (cfg_.has_image()) {
      if (img == nullptr) fail(ErrorKind::invalid_argument, "net: image branch requires embeddings");
      if (img->cols() != tab.cols())
        fail(ErrorKind::invalid_argument, "net: tabular and image batch sizes differ");
      const Mat<S> e = image_.forward(*img, ctx);
      fused_in.resize(t.rows() + e.rows(), t.cols());
      fused_in.topRows(t.rows()) = t;
      fused_in.bottomRows(e.rows()) = e;
    } else {
      fused_in = t;
    }
    last_fused_ = fusion_.forward(fused_in, ctx);
    return head_.forward(last_fused_, ctx);
  }

  // Accumulates parameter gradients given d(loss)/d(raw output).
  void backward(const Mat<S>& dout) {
    const Mat<S> dfused = fusion_.backward(head_.backward(dout));
    tabular_.backward(dfused.topRows(cfg_.d_tabular));
    if (cfg_.has_image()) image_.backward(dfused.bottomRows(cfg_.d_image));
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    for (auto* st : stacks()) {
      auto p = st->params();
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  // Parameters then running statistics, each with a stable qualified name.
  std::vector<std::pair<std::string, Mat<S>*>> named_tensors() {
    std::vector<std::pair<std::string, Mat<S>*>> out;
    for (auto* st : stacks()) {
      for (std::size_t k = 0; k < st->size(); ++k) {
        const std::string prefix = st->name() + "[" + std::to_string(k) + "]." + st->layer_kind(k) + ".";
        std::visit(
            [&](auto& l) {
              for (auto* p : l.params()) out.push_back({prefix + p->name, &p->value});
              auto bufs = l.buffers();
              for (std::size_t b = 0; b < bufs.size(); ++b)
                out.push_back({prefix + (b == 0 ? "running_mean" : "running_var"), bufs[b]});
            },
            st->layer(k));
      }
    }
    return out;
  }

  std::optional<std::string> first_nonfinite_layer() const {
    for (const auto* st : {&tabular_, &image_, &fusion_, &head_})
      if (auto l = st->first_nonfinite_layer()) return l;
    return std::nullopt;
  }

  FusedEmbedding<S> extract_fused_embedding(const Mat<S>& tab, const Mat<S>* img) {
    ForwardContext ctx{Mode::eval, nullptr};
    FusedEmbedding<S> out;
    const Mat<S> t = tabular_.forward(tab, ctx);
    Mat<S> fused_in = t;
    if (cfg_.has_image()) {
      require(img != nullptr, ErrorKind::invalid_argument, "net: image branch requires embeddings");
      out.image = image_.forward(*img, ctx);
      fused_in.resize(t.rows() + out.image.rows(), t.cols());
      fused_in.topRows(t.rows()) = t;
      fused_in.bottomRows(out.image.rows()) = out.image;
    }
    out.fused = fusion_.forward(fused_in, ctx);
    return out;
  }

  // Output affine map for regression targets: prediction = shift + scale * raw.
  double target_shift = 0.0;
  double target_scale = 1.0;

  LayerStack<S>& tabular() { return tabular_; }
  LayerStack<S>& image() { return image_; }
  LayerStack<S>& fusion() { return fusion_; }
  LayerStack<S>& head() { return head_; }

 private:
  std::vector<LayerStack<S>*> stacks() {
    std::vector<LayerStack<S>*> s = {&tabular_};
    if (cfg_.has_image()) s.push_back(&image_);
    s.push_back(&fusion_);
    s.push_back(&head_);
    return s;
  }

  NetConfig cfg_;
  LayerStack<S> tabular_, image_, fusion_, head_;
  Mat<S> last_fused_;
};

// ---------------------------------------------------------------------------
// Losses on the raw output.

template <class S>
struct LossGrad {
  double loss = 0;
  Mat<S> grad;  // d loss / d raw output
};

template <class S>
LossGrad<S> mse_loss(const Mat<S>& out, const Mat<S>& target) {
  LossGrad<S> r;
  const Mat<S> diff = out - target;
  const double b = static_cast<double>(out.cols());
  r.loss = static_cast<double>(diff.squaredNorm()) / b;
  r.grad = diff * static_cast<S>(2.0 / b);
  return r;
}

template <class S>
LossGrad<S> bce_logit_loss(const Mat<S>& logit, const Mat<S>& target) {
  LossGrad<S> r;
  const double b = static_cast<double>(logit.cols());
  r.grad.resize(logit.rows(), logit.cols());
  double total = 0;
  for (Eigen::Index i = 0; i < logit.size(); ++i) {
    const double z = static_cast<double>(logit.data()[i]);
    const double y = static_cast<double>(target.data()[i]);
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += softplus - y * z;
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    r.grad.data()[i] = static_cast<S>((p - y) / b);
  }
  r.loss = total / b;
  return r;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 60;
  double dropout_p = 0.3;
  double input_dropout_p = 0.0;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse_logprice;
  int d_image = 100;
  double validation_fraction = 0.1;  // share of training years held out
  bool refit = true;  // retrain on all years for the selected number of epochs

  void validate() const {
    require(learning_rate > 0 && batch_size >= 2 && epochs > 0, ErrorKind::invalid_argument,
            "train config: learning_rate, batch_size (>= 2) and epochs must be positive");
    require(d_image > 0, ErrorKind::invalid_argument, "train config: d_image must be positive");
  }

  nlohmann::json to_json() const {
    return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
            {"epochs", epochs},               {"dropout_p", dropout_p},
            {"input_dropout_p", input_dropout_p}, {"seed", seed},
            {"loss", loss == LossKind::mse_logprice ? "mse_logprice" : "bce"},
            {"d_image", d_image},             {"validation_fraction", validation_fraction},
            {"refit", refit}};
  }
};

// The sweep values for the image projection width.
inline const std::vector<int>& d_image_sweep() {
  static const std::vector<int> v = {10, 100, 500, 1000, 10000, 20000};
  return v;
}

template <class S>
struct NetData {
  Mat<S> tab;  // n_feature x n
  Mat<S> img;  // d_backbone x n, or empty
  Vector y;    // log price or 0/1
  std::vector<int> year;

  Eigen::Index size() const { return tab.cols(); }
  bool has_image() const { return img.size() > 0; }
};

template <class S>
NetData<S> make_net_data(const Matrix& tab_rows, const Matrix* img_rows, const Vector& y,
                         std::vector<int> year = {}) {
  NetData<S> d;
  d.tab = tab_rows.transpose().template cast<S>();
  if (img_rows) {
    require(img_rows->rows() == tab_rows.rows(), ErrorKind::invalid_argument, "net data: row mismatch");
    d.img = img_rows->transpose().template cast<S>();
  }
  d.y = y;
  d.year = std::move(year);
  return d;
}

template <class S>
NetData<S> subset(const NetData<S>& d, const std::vector<int>& idx) {
  NetData<S> out;
  out.tab = d.tab(Eigen::all, idx);
  if (d.has_image()) out.img = d.img(Eigen::all, idx);
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.y(static_cast<Eigen::Index>(k)) = d.y(idx[k]);
    if (!d.year.empty()) out.year.push_back(d.year[static_cast<std::size_t>(idx[k])]);
  }
  return out;
}

template <class S>
NetConfig make_config(const TrainConfig& tc, int n_feature, int d_backbone, Task task) {
  NetConfig c;
  c.n_feature = n_feature;
  c.d_backbone = d_backbone;
  c.d_image = tc.d_image;
  c.dropout_p = tc.dropout_p;
  c.input_dropout_p = tc.input_dropout_p;
  c.task = task;
  c.seed = tc.seed;
  return c;
}

// Raw outputs in eval mode, chunked to bound memory.
template <class S>
Vector raw_outputs(MultiModalNet<S>& net, const Mat<S>& tab, const Mat<S>* img) {
  const Eigen::Index n = tab.cols();
  Vector out(n);
  constexpr Eigen::Index chunk = 1024;
  ForwardContext ctx{Mode::eval, nullptr};
  for (Eigen::Index s = 0; s < n; s += chunk) {
    const Eigen::Index len = std::min(chunk, n - s);
    Mat<S> img_chunk;
    if (img) img_chunk = img->middleCols(s, len);
    const Mat<S> o = net.forward(tab.middleCols(s, len), img ? &img_chunk : nullptr, ctx);
    for (Eigen::Index k = 0; k < len; ++k) out(s + k) = static_cast<double>(o(0, k));
  }
  return out;
}

// Log price (regression) or probability (classification).
template <class S>
Vector predict(MultiModalNet<S>& net, const Mat<S>& tab, const Mat<S>* img) {
  Vector raw = raw_outputs(net, tab, img);
  if (net.config().task == Task::classification)
    return raw.unaryExpr([](double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); });
  return (raw.array() * net.target_scale + net.target_shift).matrix();
}

template <class S>
Vector predict(MultiModalNet<S>& net, const NetData<S>& d) {
  return predict(net, d.tab, d.has_image() ? &d.img : nullptr);
}

template <class S>
Mat<S> normalized_targets(const MultiModalNet<S>& net, const Vector& y) {
  Mat<S> t(1, y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    t(0, i) = static_cast<S>((y(i) - net.target_shift) / net.target_scale);
  return t;
}

// One optimization step on a batch: forward (train mode), backward, Adam.
template <class S>
double backward_and_step(MultiModalNet<S>& net, const Mat<S>& tab, const Mat<S>* img, const Mat<S>& target,
                         LossKind loss, const AdamOptions& adam, long step, Rng& rng,
                         long batch_index = 0) {
  ForwardContext ctx{Mode::train, &rng};
  const auto params = net.params();
  zero_grad(params);
  const Mat<S> out = net.forward(tab, img, ctx);
  const auto lg = loss == LossKind::mse_logprice ? mse_loss(out, target) : bce_logit_loss(out, target);
  if (!std::isfinite(lg.loss)) {
    const auto layer = net.first_nonfinite_layer();
    fail(ErrorKind::numeric, "net: non-finite loss at batch " + std::to_string(batch_index) +
                                 (layer ? "; first non-finite output in " + *layer : std::string()));
  }
  net.backward(lg.grad);
  adam_update(params, adam, step);
  return lg.loss;
}

struct TrainResult {
  std::vector<double> train_loss;  // per epoch, mean batch loss (target units)
  std::vector<double> val_loss;    // per epoch; empty without validation years
  int best_epoch = -1;
  bool diverged = false;
};

namespace detail {

// Holds out the final share of distinct years for model selection.
template <class S>
std::pair<std::vector<int>, std::vector<int>> year_holdout(const NetData<S>& data, double fraction) {
  std::vector<int> train_idx, val_idx;
  std::vector<int> years = data.year;
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  int cutoff = std::numeric_limits<int>::max();
  if (years.size() >= 2 && fraction > 0) {
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(years.size()))));
    cutoff = years[years.size() - std::min(n_val, years.size() - 1)];
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const bool val = !data.year.empty() && data.year[static_cast<std::size_t>(i)] >= cutoff;
    (val ? val_idx : train_idx).push_back(static_cast<int>(i));
  }
  if (train_idx.size() < 2) {
    train_idx.insert(train_idx.end(), val_idx.begin(), val_idx.end());
    val_idx.clear();
  }
  return {train_idx, val_idx};
}

// Runs up to `epochs` epochs on tr. With a non-empty va the weights of the
// best validation epoch are restored at the end.
template <class S>
TrainResult fit_epochs(MultiModalNet<S>& net, const NetData<S>& tr, const NetData<S>& va, const TrainConfig& tc,
                       int epochs) {
  const bool regression = net.config().task == Task::regression;
  if (regression) {
    net.target_shift = tr.y.mean();
    const double sd = std::sqrt(sample_variance(tr.y));
    net.target_scale = sd > 0 ? sd : 1.0;
  } else {
    net.target_shift = 0.0;
    net.target_scale = 1.0;
  }
  const double unit = regression ? net.target_scale * net.target_scale : 1.0;
  const Mat<S> tr_target = normalized_targets(net, tr.y);
  const Mat<S> va_target = normalized_targets(net, va.y);

  auto eval_loss = [&](const NetData<S>& d, const Mat<S>& target) {
    const Vector raw = raw_outputs(net, d.tab, d.has_image() ? &d.img : nullptr);
    Mat<S> out(1, raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) out(0, i) = static_cast<S>(raw(i));
    const auto lg = tc.loss == LossKind::mse_logprice ? mse_loss(out, target) : bce_logit_loss(out, target);
    return lg.loss;
  };

  TrainResult res;
  const double initial = eval_loss(tr, tr_target);
  Rng rng(mix_seed(tc.seed, 0x7EA1));
  AdamOptions adam;
  adam.learning_rate = tc.learning_rate;
  long step = 0;
  std::optional<MultiModalNet<S>> best;
  double best_val = std::numeric_limits<double>::infinity();
  int above = 0;
  const auto n = static_cast<std::size_t>(tr.size());
  const auto bs = static_cast<std::size_t>(tc.batch_size);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto order = permutation(n, rng);
    double total = 0;
    long batches = 0;
    for (std::size_t s = 0; s < n; s += bs) {
      const std::size_t len = std::min(bs, n - s);
      if (len < 2) break;
      std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(s),
                           order.begin() + static_cast<std::ptrdiff_t>(s + len));
      const Mat<S> tab = tr.tab(Eigen::all, idx);
      const Mat<S> target = tr_target(Eigen::all, idx);
      Mat<S> img;
      if (tr.has_image()) img = tr.img(Eigen::all, idx);
      total += backward_and_step(net, tab, tr.has_image() ? &img : nullptr, target, tc.loss, adam, ++step,
                                 rng, batches);
      ++batches;
    }
    const double epoch_loss = total / static_cast<double>(std::max<long>(1, batches));
    res.train_loss.push_back(epoch_loss * unit);
    if (!va_target.size()) {
      res.best_epoch = epoch;
    } else {
      const double v = eval_loss(va, va_target);
      res.val_loss.push_back(v * unit);
      if (v < best_val) {
        best_val = v;
        best = net;
        res.best_epoch = epoch;
      }
    }
    above = epoch_loss > 10.0 * initial ? above + 1 : 0;
    if (above >= 3) {
      res.diverged = true;
      break;
    }
  }
  if (best) {
    const double shift = net.target_shift, scale = net.target_scale;
    net = std::move(*best);
    net.target_shift = shift;
    net.target_scale = scale;
  }
  return res;
}

}  // namespace detail

// Early stopping on the final training years. With tc.refit the network is
// then re-initialized and trained on every row for the selected epoch count.
template <class S>
TrainResult train(MultiModalNet<S>& net, const NetData<S>& data, const TrainConfig& tc) {
  tc.validate();
  require(data.size() >= 2, ErrorKind::invalid_argument, "train: need at least 2 rows");
  require(data.tab.rows() == net.config().n_feature, ErrorKind::invalid_argument,
          "train: feature count does not match network");
  if (net.config().has_image())
    require(data.has_image() && data.img.rows() == net.config().d_backbone, ErrorKind::invalid_argument,
            "train: embedding width does not match network");

  const auto [train_idx, val_idx] = detail::year_holdout(data, tc.validation_fraction);
  const MultiModalNet<S> fresh = net;
  auto res = detail::fit_epochs(net, subset(data, train_idx), subset(data, val_idx), tc, tc.epochs);
  if (tc.refit && !val_idx.empty() && !res.diverged && res.best_epoch >= 0) {
    net = fresh;
    const auto full = detail::fit_epochs(net, data, NetData<S>{}, tc, res.best_epoch + 1);
    res.diverged = full.diverged;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoint: "MMNET", u32 version, u32 manifest length, JSON manifest,
// then every tensor in manifest order as little-endian f32 (column-major).

inline constexpr char kCheckpointMagic[5] = {'M', 'M', 'N', 'E', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) fail(ErrorKind::schema, "checkpoint: truncated header");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(k)])) << (8 * k);
  pos += 4;
  return v;
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

}  // namespace detail

template <class S>
std::string checkpoint_bytes(MultiModalNet<S>& net) {
  nlohmann::json manifest;
  manifest["config"] = net.config().to_json();
  manifest["target_shift"] = net.target_shift;
  manifest["target_scale"] = net.target_scale;
  auto& tensors = manifest["tensors"] = nlohmann::json::array();
  const auto named = net.named_tensors();
  for (const auto& [name, m] : named)
    tensors.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  const std::string text = manifest.dump();
  std::string out(kCheckpointMagic, 5);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& [name, m] : named)
    for (Eigen::Index i = 0; i < m->size(); ++i) detail::put_f32(out, static_cast<float>(m->data()[i]));
  return out;
}

template <class S>
MultiModalNet<S> checkpoint_from_bytes(const std::string& in) {
  if (in.size() < 5 || std::memcmp(in.data(), kCheckpointMagic, 5) != 0)
    fail(ErrorKind::schema, "checkpoint: bad magic (expected MMNET)");
  std::size_t pos = 5;
  if (detail::get_u32(in, pos) != kCheckpointVersion) fail(ErrorKind::schema, "checkpoint: unsupported version");
  const auto len = detail::get_u32(in, pos);
  if (pos + len > in.size()) fail(ErrorKind::schema, "checkpoint: truncated manifest");
  const auto manifest = nlohmann::json::parse(in.substr(pos, len));
  pos += len;
  MultiModalNet<S> net(NetConfig::from_json(manifest.at("config")));
  net.target_shift = manifest.at("target_shift").get<double>();
  net.target_scale = manifest.at("target_scale").get<double>();
  const auto named = net.named_tensors();
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != named.size()) fail(ErrorKind::schema, "checkpoint: layer manifest mismatch");
  for (std::size_t k = 0; k < named.size(); ++k) {
    const auto& t = tensors[k];
    auto* m = named[k].second;
    if (t.at("name").get<std::string>() != named[k].first || t.at("rows").get<Eigen::Index>() != m->rows() ||
        t.at("cols").get<Eigen::Index>() != m->cols())
      fail(ErrorKind::schema, "checkpoint: tensor " + named[k].first + " does not match manifest");
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      const std::uint32_t bits = detail::get_u32(in, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      m->data()[i] = static_cast<S>(f);
    }
  }
  if (pos != in.size()) fail(ErrorKind::schema, "checkpoint: trailing bytes");
  return net;
}

template <class S>
void save_checkpoint(MultiModalNet<S>& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  const auto bytes = checkpoint_bytes(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <class S>
MultiModalNet<S> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_artifact, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_bytes<S>(bytes);
}

}  // namespace artval::nn
