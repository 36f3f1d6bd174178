#include <algorithm>
#include <cmath>
#include <limits>

#include "gigareg/error.hpp"
#include "gigareg/features.hpp"
#include "gigareg/simd.hpp"

namespace gigareg {
namespace {

// Columns of b packed kDotLanes at a time for the dot_bank kernel.
std::vector<float> pack_bank(std::span<const Descriptor> b, int dim, int blocks) {
  std::vector<float> bank(static_cast<std::size_t>(blocks) * dim * simd::kDotLanes, 0.0f);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::size_t block = j / simd::kDotLanes;
    const std::size_t lane = j % simd::kDotLanes;
    for (int k = 0; k < dim; ++k)
      bank[(block * dim + k) * simd::kDotLanes + lane] = b[j].values[k];
  }
  return bank;
}

double distance_from_dot(float dot) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * static_cast<double>(dot)));
}

struct Nearest {
  int index = -1;
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();

  void offer(int i, double d) {
    if (d < d1) {
      d2 = d1;
      d1 = d;
      index = i;
    } else if (d < d2) {
      d2 = d;
    }
  }

  // 0 without a second neighbour; ambiguous duplicates give 1.
  double ratio() const {
    if (std::isinf(d2)) return 0.0;
    return d2 > 0.0 ? d1 / d2 : 1.0;
  }
};

}  // namespace

std::vector<DescriptorMatch> match_descriptors(std::span<const Descriptor> a,
                                               std::span<const Descriptor> b, double ratio) {
  std::vector<DescriptorMatch> out;
  if (a.empty() || b.empty()) return out;
  const int dim = static_cast<int>(a[0].values.size());
  for (const auto& d : a)
    if (static_cast<int>(d.values.size()) != dim)
      throw Error(ErrorKind::ShapeMismatch, "descriptor lengths differ");
  for (const auto& d : b)
    if (static_cast<int>(d.values.size()) != dim)
      throw Error(ErrorKind::ShapeMismatch, "descriptor lengths differ");

  const int blocks = static_cast<int>((b.size() + simd::kDotLanes - 1) / simd::kDotLanes);
  const std::vector<float> bank = pack_bank(b, dim, blocks);
  const auto& k = simd::kernels();

  std::vector<Nearest> row(a.size());
  std::vector<Nearest> col(b.size());
  std::vector<float> dots(static_cast<std::size_t>(blocks) * simd::kDotLanes);
  for (std::size_t i = 0; i < a.size(); ++i) {
    k.dot_bank(a[i].values.data(), bank.data(), dim, blocks, dots.data());
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = distance_from_dot(dots[j]);
      row[i].offer(static_cast<int>(j), d);
      col[j].offer(static_cast<int>(i), d);
    }
  }

  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = row[i].index;
    if (j < 0 || col[j].index != static_cast<int>(i)) continue;
    const double r = std::max(row[i].ratio(), col[j].ratio());
    if (!(r < ratio)) continue;
    out.push_back({static_cast<int>(i), j, std::clamp(1.0 - r, 0.0, 1.0)});
  }
  return out;
}

MatchSet classical_match(const std::vector<Feature>& source, const std::vector<Feature>& target,
                         double ratio) {
  std::vector<Descriptor> a;
  std::vector<Descriptor> b;
  a.reserve(source.size());
  b.reserve(target.size());
  for (const auto& f : source) a.push_back(f.descriptor);
  for (const auto& f : target) b.push_back(f.descriptor);
  MatchSet ms;
  ms.backend_id = "classical";
  ms.descriptor_dim = kDescriptorDim;
  for (const auto& m : match_descriptors(a, b, ratio))
    ms.matches.push_back({source[m.index_a].keypoint, target[m.index_b].keypoint, m.confidence});
  return ms;
}

}  // namespace gigareg
