#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facehal/error.hpp"
#include "facehal/image.hpp"

namespace facehal {

struct NeighborQueryResult {
  std::vector<std::size_t> indices;
  std::vector<double> dists;  // ascending
};

struct EmbeddingWeights {
  std::vector<double> w;
};

// K x D row-major block of neighbor feature vectors.
struct NeighborMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(data).subspan(k * cols, cols);
  }
};

// Immutable store of N aligned (feature, residual) pairs for one component.
// Rows are kept in f32 so the in-memory index is exactly what the binary
// format holds.
class TrainingIndex {
 public:
  static constexpr std::uint32_t kVersion = 1;

  TrainingIndex() = default;

  TrainingIndex(std::size_t n, std::size_t dim, std::vector<float> features,
                std::vector<float> residuals)
      : n_(n), dim_(dim), features_(std::move(features)), residuals_(std::move(residuals)) {
    if (features_.size() != n_ * dim_ || residuals_.size() != n_ * dim_) {
      throw ShapeError("training index: feature/residual matrices must both be " +
                       std::to_string(n_) + "x" + std::to_string(dim_));
    }
  }

  // Builds from double rows; every feature row needs a residual row of the same length.
  static TrainingIndex from_rows(const std::vector<std::vector<double>>& features,
                                 const std::vector<std::vector<double>>& residuals) {
    if (features.size() != residuals.size()) {
      throw ShapeError("training index: " + std::to_string(features.size()) +
                       " feature rows but " + std::to_string(residuals.size()) + " residual rows");
    }
    const std::size_t n = features.size();
    const std::size_t dim = n > 0 ? features.front().size() : 0;
    std::vector<float> f, r;
    f.reserve(n * dim);
    r.reserve(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
      if (features[i].size() != dim || residuals[i].size() != dim) {
        throw ShapeError("training index: row " + std::to_string(i) + " has the wrong length");
      }
      for (double v : features[i]) f.push_back(static_cast<float>(v));
      for (double v : residuals[i]) r.push_back(static_cast<float>(v));
    }
    return TrainingIndex(n, dim, std::move(f), std::move(r));
  }

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_ == 0; }

  std::span<const float> feature(std::size_t i) const {
    return std::span<const float>(features_).subspan(i * dim_, dim_);
  }
  std::span<const float> residual(std::size_t i) const {
    return std::span<const float>(residuals_).subspan(i * dim_, dim_);
  }

  bool operator==(const TrainingIndex&) const = default;

  // "MNCE" | u32 version | u32 N | u32 D | f32 features (N*D) | f32 residuals (N*D)
  void save(const std::filesystem::path& path) const {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(16 + 8 * n_ * dim_);
    const char magic[4] = {'M', 'N', 'C', 'E'};
    bytes.insert(bytes.end(), magic, magic + 4);
    auto put = [&bytes](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put(kVersion);
    put(static_cast<std::uint32_t>(n_));
    put(static_cast<std::uint32_t>(dim_));
    for (float v : features_) put(std::bit_cast<std::uint32_t>(v));
    for (float v : residuals_) put(std::bit_cast<std::uint32_t>(v));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }

  static TrainingIndex load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    const std::string where = path.string();
    if (bytes.size() < 16) throw ModelFormatError("corrupt model: truncated index " + where);
    if (std::memcmp(bytes.data(), "MNCE", 4) != 0) {
      throw ModelFormatError("corrupt model: bad index magic in " + where);
    }
    auto get = [&bytes](std::size_t off) {
      return static_cast<std::uint32_t>(bytes[off]) |
             (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
             (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
             (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    };
    const std::uint32_t version = get(4);
    if (version != kVersion) {
      throw ModelFormatError("unsupported version " + std::to_string(version) + " in " + where +
                             " (expected " + std::to_string(kVersion) + ")");
    }
    const std::size_t n = get(8);
    const std::size_t dim = get(12);
    if (bytes.size() != 16 + 8 * n * dim) {
      throw ModelFormatError("corrupt model: index " + where + " has " +
                             std::to_string(bytes.size()) + " bytes, header implies " +
                             std::to_string(16 + 8 * n * dim));
    }
    std::vector<float> f(n * dim), r(n * dim);
    for (std::size_t i = 0; i < n * dim; ++i) {
      f[i] = std::bit_cast<float>(get(16 + 4 * i));
      r[i] = std::bit_cast<float>(get(16 + 4 * (n * dim + i)));
    }
    return TrainingIndex(n, dim, std::move(f), std::move(r));
  }

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> features_;
  std::vector<float> residuals_;
};

namespace detail {

inline double squared_distance(std::span<const double> q, std::span<const float> row) {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double d = q[i] - static_cast<double>(row[i]);
    acc += d * d;
  }
  return acc;
}

}  // namespace detail

// Exact K nearest rows by Euclidean distance, ties broken by lower index.
// `exclude` removes one row from the candidates (leave-one-out queries).
inline NeighborQueryResult knn(const TrainingIndex& index, std::span<const double> q, std::size_t k,
                               std::optional<std::size_t> exclude = std::nullopt) {
  if (index.empty()) throw Error("knn: empty index");
  if (q.size() != index.dim()) {
    throw ShapeError("knn: query has dimension " + std::to_string(q.size()) + ", index has " +
                     std::to_string(index.dim()));
  }
  const std::size_t candidates = index.size() - (exclude && *exclude < index.size() ? 1 : 0);
  if (k == 0) throw Error("knn: K must be >= 1");
  if (k > candidates) {
    throw Error("knn: K = " + std::to_string(k) + " exceeds the " + std::to_string(candidates) +
                " available candidates");
  }
  std::vector<std::pair<double, std::size_t>> all;
  all.reserve(candidates);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (exclude && *exclude == i) continue;
    all.emplace_back(detail::squared_distance(q, index.feature(i)), i);
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  NeighborQueryResult res;
  res.indices.reserve(k);
  res.dists.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    res.indices.push_back(all[i].second);
    res.dists.push_back(std::sqrt(all[i].first));
  }
  return res;
}

inline NeighborMatrix gather_neighbors(const TrainingIndex& index,
                                       const std::vector<std::size_t>& ids) {
  NeighborMatrix m{ids.size(), index.dim(), {}};
  m.data.reserve(ids.size() * index.dim());
  for (std::size_t id : ids) {
    const auto row = index.feature(id);
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
  return m;
}

// d_k = ||n_k - q||_2
inline std::vector<double> locality_adaptor(std::span<const double> q,
                                            const NeighborMatrix& neighbors) {
  if (neighbors.cols != q.size()) throw ShapeError("locality_adaptor: dimension mismatch");
  std::vector<double> d(neighbors.rows);
  for (std::size_t k = 0; k < neighbors.rows; ++k) d[k] = distance2(q, neighbors.row(k));
  return d;
}

inline constexpr double kGramJitter = 1e-10;

namespace detail {

// Least squares min ||A w - b|| for a column-major m x n matrix of full
// column rank, by Householder QR; false if A is numerically rank deficient.
inline bool householder_least_squares(std::vector<double> a, std::vector<double> b, std::size_t m,
                                      std::size_t n, std::vector<double>& w) {
  std::vector<double> diag(n);
  for (std::size_t j = 0; j < n; ++j) {
    double* col = a.data() + j * m;
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm += col[i] * col[i];
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) return false;
    const double xj = col[j];
    const double alpha = xj > 0.0 ? -norm : norm;
    col[j] -= alpha;  // col[j..m) now holds the reflector v
    const double vnorm2 = norm * norm - xj * xj + col[j] * col[j];
    const auto reflect = [&](double* target) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += col[i] * target[i];
      s = 2.0 * s / vnorm2;
      for (std::size_t i = j; i < m; ++i) target[i] -= s * col[i];
    };
    for (std::size_t c = j + 1; c < n; ++c) reflect(a.data() + c * m);
    reflect(b.data());
    diag[j] = alpha;
  }
  w.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[c * m + i] * w[c];
    w[i] = s / diag[i];
  }
  return all_finite(w);
}

}  // namespace detail

// argmin_w ||q - sum_k w_k n_k||^2 + lambda_emb ||d .* w||^2 + eps tr(G^T G)/K ||w||^2,
// i.e. the solution of (G^T G + lambda_emb diag(d^2) + eps tr(G^T G)/K I) w = G^T q.
// It is computed from the equivalent stacked least-squares problem
// [G; sqrt(lambda_emb) diag(d); sqrt(eps tr/K) I] w = [q; 0; 0] so that the
// conditioning is not squared by forming the Gram matrix.
inline EmbeddingWeights solve_weights(std::span<const double> q, const NeighborMatrix& neighbors,
                                      std::span<const double> d, double lambda_emb) {
  const std::size_t k = neighbors.rows;
  if (k == 0) throw Error("solve_weights: no neighbors (K = 0)");
  if (neighbors.cols != q.size() || d.size() != k) {
    throw ShapeError("solve_weights: dimension mismatch");
  }
  if (lambda_emb < 0.0) throw NumericError("solve_weights: lambda_emb must be >= 0");
  if (!all_finite(q) || !all_finite(neighbors.data) || !all_finite(d)) {
    throw NumericError("solve_weights: non-finite input");
  }
  const std::size_t dim = neighbors.cols, m = dim + 2 * k;
  double trace = 0.0;
  for (double v : neighbors.data) trace += v * v;
  // all-zero neighbors leave nothing to scale the jitter by
  const double jitter = trace > 0.0 ? kGramJitter * trace / static_cast<double>(k) : kGramJitter;
  std::vector<double> a(m * k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const auto row = neighbors.row(c);
    std::copy(row.begin(), row.end(), a.begin() + static_cast<std::ptrdiff_t>(c * m));
    a[c * m + dim + c] = std::sqrt(lambda_emb) * d[c];
    a[c * m + dim + k + c] = std::sqrt(jitter);
  }
  std::vector<double> b(m, 0.0);
  std::copy(q.begin(), q.end(), b.begin());
  std::vector<double> w;
  if (!detail::householder_least_squares(std::move(a), std::move(b), m, k, w)) {
    throw NumericError("solve_weights: regularized system is singular");
  }
  return {std::move(w)};
}

struct ComponentEmbedding {
  std::vector<double> output;
  NeighborQueryResult neighbors;
  EmbeddingWeights weights;
};

inline ComponentEmbedding embed_component_detailed(const TrainingIndex& index,
                                                   std::span<const double> q, std::size_t k,
                                                   double lambda_emb,
                                                   std::optional<std::size_t> exclude = std::nullopt) {
  ComponentEmbedding e;
  e.output.assign(q.begin(), q.end());
  if (q.empty()) return e;  // component with no pixels under this layout
  e.neighbors = knn(index, q, k, exclude);
  if (exclude) {
    for (std::size_t id : e.neighbors.indices) {
      if (id == *exclude) throw std::logic_error("leave-one-out violated: query selected itself");
    }
  }
  const NeighborMatrix g = gather_neighbors(index, e.neighbors.indices);
  const std::vector<double> d = locality_adaptor(q, g);
  e.weights = solve_weights(q, g, d, lambda_emb);
  for (std::size_t n = 0; n < k; ++n) {
    const double w = e.weights.w[n];
    const auto r = index.residual(e.neighbors.indices[n]);
    for (std::size_t i = 0; i < e.output.size(); ++i) e.output[i] += w * static_cast<double>(r[i]);
  }
  return e;
}

// q + sum_k w_k r_k over the K nearest training components.
inline std::vector<double> embed_component(const TrainingIndex& index, std::span<const double> q,
                                           std::size_t k, double lambda_emb,
                                           std::optional<std::size_t> exclude = std::nullopt) {
  return embed_component_detailed(index, q, k, lambda_emb, exclude).output;
}

}  // namespace facehal
