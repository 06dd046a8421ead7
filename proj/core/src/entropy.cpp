#include "rare/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "rare/common.hpp"
#include "rare/rng.hpp"
#include "rare/threading.hpp"

namespace rare {

EmbeddingConfig EmbeddingConfig::auto_for(int64_t feature_dim, uint64_t seed) {
  EmbeddingConfig cfg;
  cfg.seed = seed;
  if (feature_dim <= 64) {
    cfg.mode = EmbedMode::identity;
    cfg.target_dim = feature_dim;
  } else {
    cfg.mode = EmbedMode::random_projection;
    cfg.target_dim = 64;
  }
  return cfg;
}

Matrix embed(const Matrix& features, const EmbeddingConfig& config) {
  require_finite_msg(features.all_finite(), "embed: non-finite features");
  if (config.mode == EmbedMode::identity) return features;
  require_input(config.target_dim >= 1, "embed: projection width must be >= 1");
  int64_t d = features.cols();
  Matrix proj(d, config.target_dim);
  Rng rng(config.seed);
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int64_t i = 0; i < d; ++i)
    for (int64_t j = 0; j < config.target_dim; ++j) proj(i, j) = rng.normal() * scale;
  return matmul(features, proj);
}

Matrix feature_entropy(const Matrix& z, double* probability_sum) {
  int64_t n = z.rows();
  require_input(n >= 2, "feature_entropy: need at least two nodes");
  require_finite_msg(z.all_finite(), "feature_entropy: non-finite embeddings");

  Matrix gram(n, n);
  int64_t h = z.cols();
  parallel_for(n, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const double* zi = z.row(i);
      double* gi = gram.row(i);
      for (int64_t j = 0; j < n; ++j) {
        const double* zj = z.row(j);
        double acc = 0.0;
        for (int64_t k = 0; k < h; ++k) acc += zi[k] * zj[k];
        gi[j] = acc;
      }
    }
  });

  // log-sum-exp over all n^2 ordered pairs, fixed row-major order
  double peak = gram(0, 0);
  for (int64_t i = 0; i < n; ++i) {
    const double* gi = gram.row(i);
    for (int64_t j = 0; j < n; ++j) peak = std::max(peak, gi[j]);
  }
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double* gi = gram.row(i);
    for (int64_t j = 0; j < n; ++j) acc += std::exp(gi[j] - peak);
  }
  double log_z = peak + std::log(acc);
  require_finite_msg(std::isfinite(log_z), "feature_entropy: non-finite partition function");

  Matrix out(n, n);
  parallel_for(n, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const double* gi = gram.row(i);
      double* oi = out.row(i);
      for (int64_t j = 0; j < n; ++j) {
        double lp = gi[j] - log_z;   // log P, always <= 0 up to roundoff
        oi[j] = -std::exp(lp) * lp;
      }
    }
  });

#ifdef RARE_INTERNAL_CHECKS
  bool want_mass = true;
#else
  bool want_mass = probability_sum != nullptr;
#endif
  if (want_mass) {
    double mass = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double* gi = gram.row(i);
      for (int64_t j = 0; j < n; ++j) mass += std::exp(gi[j] - log_z);
    }
#ifdef RARE_INTERNAL_CHECKS
    require_finite_msg(std::abs(mass - 1.0) <= 1e-9,
                       "feature_entropy: pair probabilities do not sum to 1");
#endif
    if (probability_sum) *probability_sum = mass;
  }
  return out;
}

namespace {

std::vector<DegreeProfile> all_profiles(const Graph& g) {
  int64_t n = g.num_nodes();
  int64_t width = g.max_degree() + 1;
  std::vector<DegreeProfile> profiles(static_cast<size_t>(n));
  for (int64_t v = 0; v < n; ++v) {
    DegreeProfile& p = profiles[static_cast<size_t>(v)];
    p.sequence.reserve(static_cast<size_t>(width));
    p.sequence.push_back(g.degree(static_cast<NodeId>(v)));
    for (NodeId u : g.neighbors(static_cast<NodeId>(v))) p.sequence.push_back(g.degree(u));
    std::sort(p.sequence.begin(), p.sequence.end(), std::greater<int64_t>());
    p.sequence.resize(static_cast<size_t>(width), 0);
    double total = 0.0;
    for (int64_t d : p.sequence) total += static_cast<double>(d);
    p.distribution.assign(p.sequence.size(), 0.0);
    if (total == 0.0) {
      p.distribution[0] = 1.0;  // isolated node: point mass
    } else {
      for (size_t i = 0; i < p.sequence.size(); ++i)
        p.distribution[i] = static_cast<double>(p.sequence[i]) / total;
    }
  }
  return profiles;
}

// KL(p || m) in bits; 0 log 0 = 0. m_i is never 0 where p_i > 0 because m is
// a half-mixture containing p.
double kl_bits(const std::vector<double>& p, const std::vector<double>& m) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) acc += p[i] * std::log2(p[i] / m[i]);
  return acc;
}

}  // namespace

DegreeProfile degree_profile(const Graph& g, NodeId v) {
  require_input(v >= 0 && v < g.num_nodes(), "degree_profile: node out of range");
  return all_profiles(g)[static_cast<size_t>(v)];
}

Matrix structural_entropy(const Graph& g) {
  int64_t n = g.num_nodes();
  auto profiles = all_profiles(g);
  Matrix out(n, n);
  parallel_for(n, [&](int64_t lo, int64_t hi) {
    std::vector<double> mix(profiles[0].distribution.size());
    for (int64_t v = lo; v < hi; ++v) {
      const auto& pv = profiles[static_cast<size_t>(v)].distribution;
      double* ov = out.row(v);
      for (int64_t u = 0; u < n; ++u) {
        if (u == v) {
          ov[u] = 1.0;
          continue;
        }
        const auto& pu = profiles[static_cast<size_t>(u)].distribution;
        for (size_t i = 0; i < mix.size(); ++i) mix[i] = 0.5 * (pv[i] + pu[i]);
        double js = 0.5 * kl_bits(pv, mix) + 0.5 * kl_bits(pu, mix);
        // JS in bits lies in [0,1]; trim roundoff spill
        js = std::min(1.0, std::max(0.0, js));
        ov[u] = 1.0 - js;
      }
    }
  });
  return out;
}

EntropyTable relative_entropy(Matrix feature, Matrix structural, double lambda) {
  int64_t n = feature.rows();
  require_input(n == feature.cols() && n == structural.rows() && n == structural.cols(),
                "relative_entropy: matrices must be square and same size");
  require_input(n <= 20000,
                "relative_entropy: dense table refused above 20000 nodes (would need tens of GB)");
  require_finite_msg(std::isfinite(lambda), "relative_entropy: non-finite lambda");
  EntropyTable t;
  t.lambda = lambda;
  t.combined = Matrix(n, n);
  parallel_for(n, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const double* f = feature.row(i);
      const double* s = structural.row(i);
      double* c = t.combined.row(i);
      for (int64_t j = 0; j < n; ++j) c[j] = f[j] + lambda * s[j];
    }
  });
  t.feature = std::move(feature);
  t.structural = std::move(structural);
  require_finite_msg(t.combined.all_finite(), "relative_entropy: non-finite entries");
  return t;
}

namespace {

constexpr char kTableMagic[4] = {'R', 'A', 'R', 'E'};
constexpr uint32_t kTableVersion = 1;

void put_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw IoError("short read in entropy table: " + path);
}

static_assert(sizeof(double) == 8);

void put_matrix(std::ofstream& out, const Matrix& m) {
  put_bytes(out, m.data().data(), static_cast<size_t>(m.size()) * 8);
}

void get_matrix(std::ifstream& in, Matrix& m, const std::string& path) {
  get_bytes(in, m.data().data(), static_cast<size_t>(m.size()) * 8, path);
}

}  // namespace

void EntropyTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  put_bytes(out, kTableMagic, 4);
  uint32_t version = kTableVersion;
  put_bytes(out, &version, 4);
  uint64_t n = static_cast<uint64_t>(combined.rows());
  put_bytes(out, &n, 8);
  put_bytes(out, &lambda, 8);
  put_matrix(out, feature);
  put_matrix(out, structural);
  put_matrix(out, combined);
  if (!out) throw IoError("short write: " + path);
}

EntropyTable EntropyTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open entropy table: " + path);
  char magic[4];
  get_bytes(in, magic, 4, path);
  require_input(std::memcmp(magic, kTableMagic, 4) == 0,
                "entropy table: bad magic in " + path);
  uint32_t version = 0;
  get_bytes(in, &version, 4, path);
  require_input(version == kTableVersion, "entropy table: unsupported version in " + path);
  uint64_t n = 0;
  get_bytes(in, &n, 8, path);
  require_input(n >= 1 && n <= 20000, "entropy table: implausible node count in " + path);
  EntropyTable t;
  get_bytes(in, &t.lambda, 8, path);
  int64_t sn = static_cast<int64_t>(n);
  t.feature = Matrix(sn, sn);
  t.structural = Matrix(sn, sn);
  t.combined = Matrix(sn, sn);
  get_matrix(in, t.feature, path);
  get_matrix(in, t.structural, path);
  get_matrix(in, t.combined, path);
  return t;
}

EntropySequence build_sequences(const EntropyTable& table, const Graph& g) {
  int64_t n = g.num_nodes();
  require_input(table.size() == n, "build_sequences: table size != node count");
  EntropySequence seq;
  seq.add_candidates.resize(static_cast<size_t>(n));
  seq.delete_candidates.resize(static_cast<size_t>(n));
  parallel_for(n, [&](int64_t lo, int64_t hi) {
    for (int64_t v = lo; v < hi; ++v) {
      const double* hv = table.combined.row(v);
      auto nbrs = g.neighbors(static_cast<NodeId>(v));

      auto& add = seq.add_candidates[static_cast<size_t>(v)];
      add.reserve(static_cast<size_t>(n - 1) - nbrs.size());
      size_t cursor = 0;
      for (int64_t u = 0; u < n; ++u) {
        if (u == v) continue;
        while (cursor < nbrs.size() && nbrs[cursor] < u) ++cursor;
        if (cursor < nbrs.size() && nbrs[cursor] == u) continue;
        add.push_back(static_cast<NodeId>(u));
      }
      std::sort(add.begin(), add.end(), [&](NodeId a, NodeId b) {
        if (hv[a] != hv[b]) return hv[a] > hv[b];
        return a < b;
      });

      auto& del = seq.delete_candidates[static_cast<size_t>(v)];
      del.assign(nbrs.begin(), nbrs.end());
      std::sort(del.begin(), del.end(), [&](NodeId a, NodeId b) {
        if (hv[a] != hv[b]) return hv[a] < hv[b];
        return a < b;
      });
    }
  });
  return seq;
}

void shuffle_sequences(EntropySequence& seq, Rng& rng) {
  for (auto& lst : seq.add_candidates) rng.shuffle(lst);
  for (auto& lst : seq.delete_candidates) rng.shuffle(lst);
}

}  // namespace rare
