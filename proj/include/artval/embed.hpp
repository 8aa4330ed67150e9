#pragma once

// Image-embedding tables (AEMB wire format) and 2-d PCA projection.

#include "artval/core.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

namespace artval::embed {

// Wire format, all integers little-endian:
//   "AEMB" | u32 version=1 | u32 dim | u64 count | u16 tag length | tag
//   count x ( u16 id length | id | dim x f32 )
inline constexpr char kMagic[4] = {'A', 'E', 'M', 'B'};
inline constexpr std::uint32_t kVersion = 1;

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dim, std::string backbone_tag) : dim_(dim), tag_(std::move(backbone_tag)) {
    require(dim > 0, ErrorKind::invalid_argument, "embedding table: dim must be positive");
  }

  void add(const std::string& id, std::vector<float> v) {
    if (static_cast<int>(v.size()) != dim_)
      fail(ErrorKind::schema, "embedding " + id + ": length " + std::to_string(v.size()) +
                                  " does not match table dim " + std::to_string(dim_));
    for (float x : v)
      if (!std::isfinite(x)) fail(ErrorKind::data, "embedding " + id + ": non-finite value");
    if (!index_.emplace(id, ids_.size()).second) fail(ErrorKind::schema, "embedding: duplicate id " + id);
    ids_.push_back(id);
    values_.push_back(std::move(v));
  }

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& backbone_tag() const { return tag_; }
  const std::vector<std::string>& ids() const { return ids_; }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }

  const std::vector<float>& at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorKind::data, "embedding: no vector for id " + id);
    return values_[it->second];
  }
  const std::vector<float>& at(std::size_t k) const { return values_[k]; }

  // Rows in the order of `ids`.
  Matrix rows(const std::vector<std::string>& ids) const {
    Matrix out(static_cast<Eigen::Index>(ids.size()), dim_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& v = at(ids[i]);
      for (int j = 0; j < dim_; ++j) out(static_cast<Eigen::Index>(i), j) = v[static_cast<std::size_t>(j)];
    }
    return out;
  }

  bool operator==(const EmbeddingTable& o) const {
    return dim_ == o.dim_ && tag_ == o.tag_ && ids_ == o.ids_ && values_ == o.values_;
  }

 private:
  int dim_ = 0;
  std::string tag_;
  std::vector<std::string> ids_;
  std::vector<std::vector<float>> values_;
  std::map<std::string, std::size_t> index_;
};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  template <class T>
  T le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k)
      v |= static_cast<T>(static_cast<unsigned char>(b_[pos_ + k])) << (8 * k);
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (pos_ + n > b_.size()) fail(ErrorKind::schema, std::string("AEMB: truncated ") + what);
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string to_bytes(const EmbeddingTable& t) {
  require(t.backbone_tag().size() <= 0xFFFF, ErrorKind::invalid_argument, "AEMB: backbone tag too long");
  std::string out(kMagic, 4);
  detail::put_le<std::uint32_t>(out, kVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
  detail::put_le<std::uint64_t>(out, t.size());
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.backbone_tag().size()));
  out += t.backbone_tag();
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& id = t.ids()[k];
    require(id.size() <= 0xFFFF, ErrorKind::invalid_argument, "AEMB: id too long");
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    for (float f : t.at(k)) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      detail::put_le<std::uint32_t>(out, bits);
    }
  }
  return out;
}

inline EmbeddingTable from_bytes(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorKind::schema, "AEMB: bad magic");
  detail::Reader r(bytes);
  r.str(4, "magic");
  const auto version = r.le<std::uint32_t>("header");
  if (version != kVersion) fail(ErrorKind::schema, "AEMB: unsupported version " + std::to_string(version));
  const auto dim = r.le<std::uint32_t>("header");
  const auto count = r.le<std::uint64_t>("header");
  if (dim == 0) fail(ErrorKind::schema, "AEMB: zero dim");
  const auto tag_len = r.le<std::uint16_t>("header");
  EmbeddingTable t(static_cast<int>(dim), r.str(tag_len, "header"));
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto id_len = r.le<std::uint16_t>("record");
    std::string id = r.str(id_len, "record");
    std::vector<float> v(dim);
    for (auto& f : v) {
      const auto bits = r.le<std::uint32_t>("record");
      std::memcpy(&f, &bits, 4);
    }
    if (t.contains(id)) fail(ErrorKind::schema, "AEMB: duplicate id " + id);
    t.add(id, std::move(v));
  }
  // Leftover bytes mean the records are wider than the header dim.
  if (!r.done()) fail(ErrorKind::schema, "AEMB: record length does not match header dim (trailing bytes)");
  return t;
}

inline void write_embeddings(const EmbeddingTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  const auto bytes = to_bytes(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline EmbeddingTable read_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_artifact, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

// ---------------------------------------------------------------------------
// PCA

struct PCAProjection {
  Matrix components;  // 2 x dim, orthonormal rows
  Vector explained_variance_ratio;  // 2
  Vector means;  // dim
  std::vector<std::string> warnings;

  Matrix project(const Matrix& x) const {
    return (x.rowwise() - means.transpose()) * components.transpose();
  }
};

struct PCAResult {
  PCAProjection projection;
  Matrix points;  // n x 2
};

inline PCAResult pca_project(const Matrix& x) {
  require(x.rows() >= 3 && x.cols() >= 2, ErrorKind::invalid_argument,
          "pca: need at least 3 vectors of dimension >= 2");
  PCAResult out;
  auto& p = out.projection;
  p.means = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - p.means.transpose();
  Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  const double total = s.squaredNorm();
  require(total > 0, ErrorKind::data, "pca: all vectors identical");
  p.components = svd.matrixV().leftCols(2).transpose();
  p.explained_variance_ratio.resize(2);
  const double tol = std::max(x.rows(), x.cols()) * s(0) * 1e-12;
  for (int k = 0; k < 2; ++k) {
    const bool present = k < s.size() && s(k) > tol;
    p.explained_variance_ratio(k) = present ? s(k) * s(k) / total : 0.0;
  }
  if (p.explained_variance_ratio(1) == 0.0)
    p.warnings.push_back("pca: rank < 2; second component carries no variance");
  for (int k = 0; k < 2; ++k) {
    Eigen::Index arg;
    p.components.row(k).cwiseAbs().maxCoeff(&arg);
    if (p.components(k, arg) < 0) p.components.row(k) *= -1.0;
  }
  out.points = c * p.components.transpose();
  return out;
}

}  // namespace artval::embed
