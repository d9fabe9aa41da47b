#include "kbound/instance.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "kbound/rng.hpp"

namespace kbound {

using nlohmann::json;

BlockKernel::BlockKernel(int d, std::vector<std::uint8_t> sigma,
                         std::vector<PointAssignment> assignment)
    : d_(d), sigma_(std::move(sigma)), assignment_(std::move(assignment)) {
  if (d_ < 1) throw std::invalid_argument("BlockKernel: d must be >= 1");
  if (sigma_.size() != static_cast<std::size_t>(d_))
    throw std::invalid_argument("BlockKernel: sigma length != d");
  block_sizes_.assign(d_, 0);
  std::vector<int> sub_counts(2 * d_, 0);
  for (const PointAssignment& pa : assignment_) {
    if (pa.block >= static_cast<std::uint32_t>(d_) || pa.sub > 1)
      throw std::invalid_argument("BlockKernel: assignment out of range");
    block_sizes_[pa.block] += 1;
    sub_counts[2 * pa.block + pa.sub] += 1;
  }
  for (int i = 0; i < d_; ++i) {
    if (sub_counts[2 * i] != sub_counts[2 * i + 1])
      throw std::invalid_argument("BlockKernel: sub-blocks of a block must have equal size");
  }
}

int BlockKernel::sigma_popcount() const {
  int c = 0;
  for (std::uint8_t b : sigma_) c += b;
  return c;
}

void BlockKernel::check_index(int t) const {
  if (t < 0 || t >= m()) throw std::out_of_range("BlockKernel: index out of range");
}

int BlockKernel::entry(int s, int r) const {
  check_index(s);
  check_index(r);
  const PointAssignment& a = assignment_[s];
  const PointAssignment& b = assignment_[r];
  if (a.block != b.block) return 0;
  if (a.sub == b.sub) return 1;
  return sigma_[a.block] ? 1 : 0;
}

SymMatrix BlockKernel::materialize() const {
  if (m() > 2048) throw std::runtime_error("BlockKernel::materialize is gated to m <= 2048");
  SymMatrix k(static_cast<std::size_t>(m()));
  for (int s = 0; s < m(); ++s)
    for (int r = s; r < m(); ++r) k.set_symmetric(s, r, static_cast<double>(entry(s, r)));
  return k;
}

static std::vector<PointAssignment> shuffled_pair_assignment(const std::vector<std::uint32_t>& labels,
                                                             int m, Rng& rng) {
  std::vector<PointAssignment> assignment;
  assignment.reserve(m);
  for (std::uint32_t label : labels) {
    assignment.push_back({label, 0});
    assignment.push_back({label, 1});
  }
  rng.shuffle(std::span<PointAssignment>(assignment));
  return assignment;
}

BlockKernel sample_hard_kernel(int d, int m, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("sample_hard_kernel: d must be >= 1");
  if (m < 2 || m % 2 != 0) throw std::invalid_argument("sample_hard_kernel: m must be even and >= 2");
  if (m < 2 * d)
    std::cerr << "sample_hard_kernel: warning: m=" << m << " < 2d=" << 2 * d
              << "; lower-bound regimes assume m >= 2d\n";

  Rng rng(seed);
  std::vector<std::uint8_t> sigma(d);
  for (auto& bit : sigma) bit = rng.bit() ? 1 : 0;

  std::vector<std::uint32_t> labels(m / 2);
  for (auto& label : labels) label = static_cast<std::uint32_t>(rng.uniform_below(d));

  return BlockKernel(d, std::move(sigma), shuffled_pair_assignment(labels, m, rng));
}

BlockKernel resample_permutation(const BlockKernel& kernel, std::uint64_t seed) {
  // Recover one label per pair from the block sizes, reshuffle only.
  std::vector<std::uint32_t> labels;
  labels.reserve(kernel.m() / 2);
  for (int i = 0; i < kernel.d(); ++i)
    for (int c = 0; c < kernel.block_sizes()[i] / 2; ++c)
      labels.push_back(static_cast<std::uint32_t>(i));
  Rng rng(seed);
  return BlockKernel(kernel.d(), kernel.sigma(),
                     shuffled_pair_assignment(labels, kernel.m(), rng));
}

std::vector<int> realize_instances(const BlockKernel& kernel) {
  std::vector<int> basis(kernel.m());
  for (int t = 0; t < kernel.m(); ++t) {
    const PointAssignment& pa = kernel.assignment()[t];
    const bool merged = kernel.sigma()[pa.block] != 0;
    basis[t] = (merged || pa.sub == 0) ? static_cast<int>(pa.block)
                                       : static_cast<int>(pa.block) + kernel.d();
  }
  return basis;
}

LowRankInstance::LowRankInstance(int d, int m, std::vector<int> z)
    : d_(d), m_(m), z_(std::move(z)) {
  if (d_ < 1) throw std::invalid_argument("LowRankInstance: d must be >= 1");
  if (m_ < 2 * d_ || m_ % (2 * d_) != 0)
    throw std::invalid_argument("LowRankInstance: 2d must divide m");
  if (z_.size() != static_cast<std::size_t>(2 * d_))
    throw std::invalid_argument("LowRankInstance: z must have length 2d");
  for (int v : z_)
    if (v != 1 && v != -1) throw std::invalid_argument("LowRankInstance: z entries must be +-1");
}

std::vector<double> LowRankInstance::targets() const {
  std::vector<double> y(m_);
  for (int t = 0; t < m_; ++t) y[t] = target(t);
  return y;
}

SymMatrix LowRankInstance::materialize() const {
  if (m_ > 2048) throw std::runtime_error("LowRankInstance::materialize is gated to m <= 2048");
  SymMatrix k(static_cast<std::size_t>(m_));
  for (int s = 0; s < m_; ++s)
    for (int r = s; r < m_; ++r) k.set_symmetric(s, r, static_cast<double>(entry(s, r)));
  return k;
}

ZSearchResult search_adversarial_z(const SymMatrix& reduced_gram, int d, int search_budget,
                                   std::uint64_t seed) {
  const int n = 2 * d;
  if (reduced_gram.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("search_adversarial_z: reduced matrix must be 2d x 2d");

  // P = U_d U_d^T, the projector onto the span of the bottom-d eigenvectors;
  // the objective is z^T P z.
  const EigenDecomposition eig = jacobi_eigensolve(reduced_gram);
  SymMatrix p(static_cast<std::size_t>(n));
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p(i, j) += eig.vectors(i, k) * eig.vectors(j, k);

  const double threshold = static_cast<double>(d) - 1e-9;
  Rng rng(seed);
  ZSearchResult best{std::vector<int>(n, 1), -1.0, false, 0};

  auto score_of = [&](const std::vector<int>& z, std::vector<double>& pz) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += p(i, j) * z[j];
      pz[i] = acc;
      s += acc * z[i];
    }
    return s;
  };

  const int restarts = 32;
  std::vector<double> pz(n);
  for (int attempt = 0; attempt < restarts && best.evaluations < search_budget; ++attempt) {
    std::vector<int> z(n);
    if (attempt == 0) z.assign(n, 1);
    else for (int i = 0; i < n; ++i) z[i] = rng.bit() ? 1 : -1;

    double score = score_of(z, pz);
    ++best.evaluations;
    if (score > best.score) { best.score = score; best.z = z; }
    if (best.score >= threshold) break;

    // Greedy single-coordinate flips to a local maximum. Flipping z_j changes
    // the score by 4*(P_jj - z_j*(Pz)_j).
    bool improved = true;
    while (improved && best.evaluations < search_budget && best.score < threshold) {
      improved = false;
      int arg = -1;
      double best_gain = 1e-12;
      for (int j = 0; j < n; ++j) {
        const double gain = 4.0 * (p(j, j) - z[j] * pz[j]);
        if (gain > best_gain) { best_gain = gain; arg = j; }
      }
      if (arg >= 0) {
        z[arg] = -z[arg];
        score = score_of(z, pz);
        ++best.evaluations;
        improved = true;
        if (score > best.score) { best.score = score; best.z = z; }
      }
    }
  }

  best.reached = best.score >= threshold;
  return best;
}

LowRankInstance build_lowrank_instance(int d, int m, std::vector<int> z,
                                       const SymMatrix* reduced_gram, int search_budget,
                                       std::uint64_t seed) {
  if (!z.empty()) return LowRankInstance(d, m, std::move(z));
  if (reduced_gram == nullptr)
    throw std::invalid_argument("build_lowrank_instance: z search needs the reduced matrix");
  ZSearchResult res = search_adversarial_z(*reduced_gram, d, search_budget, seed);
  if (!res.reached)
    throw std::runtime_error("build_lowrank_instance: z search exhausted budget (best score " +
                             std::to_string(res.score) + " < d = " + std::to_string(d) + ")");
  return LowRankInstance(d, m, std::move(res.z));
}

std::string to_json(const BlockKernel& kernel) {
  json doc;
  doc["m"] = kernel.m();
  doc["d"] = kernel.d();
  doc["sigma"] = json::array();
  for (std::uint8_t b : kernel.sigma()) doc["sigma"].push_back(static_cast<int>(b));
  json assignment = json::array();
  for (const PointAssignment& pa : kernel.assignment())
    assignment.push_back({pa.block + 1, pa.sub + 1});
  doc["assignment"] = std::move(assignment);
  return doc.dump();
}

std::string to_json(const LowRankInstance& instance) {
  json doc;
  doc["m"] = instance.m();
  doc["d"] = instance.d();
  doc["z"] = instance.z();
  return doc.dump();
}

bool json_is_lowrank(const std::string& text) {
  return json::parse(text).contains("z");
}

BlockKernel block_kernel_from_json(const std::string& text) {
  const json doc = json::parse(text);
  const int m = doc.at("m").get<int>();
  const int d = doc.at("d").get<int>();
  std::vector<std::uint8_t> sigma;
  for (const auto& b : doc.at("sigma")) sigma.push_back(static_cast<std::uint8_t>(b.get<int>()));
  std::vector<PointAssignment> assignment;
  for (const auto& pair : doc.at("assignment")) {
    const int block = pair.at(0).get<int>();
    const int sub = pair.at(1).get<int>();
    if (block < 1 || block > d || sub < 1 || sub > 2)
      throw std::invalid_argument("instance JSON: assignment entry out of range");
    assignment.push_back({static_cast<std::uint32_t>(block - 1), static_cast<std::uint8_t>(sub - 1)});
  }
  if (static_cast<int>(assignment.size()) != m)
    throw std::invalid_argument("instance JSON: assignment length != m");
  return BlockKernel(d, std::move(sigma), std::move(assignment));
}

LowRankInstance lowrank_instance_from_json(const std::string& text) {
  const json doc = json::parse(text);
  return LowRankInstance(doc.at("d").get<int>(), doc.at("m").get<int>(),
                         doc.at("z").get<std::vector<int>>());
}

}  // namespace kbound
