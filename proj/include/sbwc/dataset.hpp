#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sbwc/linalg.hpp"

namespace sbwc {

/// Labelled sample with features bounded by the recorded radius R.
struct Dataset {
  RowMatrix X;           // n x d
  std::vector<int> y;    // +-1
  double R = 0.0;        // max_i ||x_i|| <= R
  std::string provenance;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
  std::span<const double> x(int i) const {
    return {X.row(i).data(), static_cast<std::size_t>(X.cols())};
  }
  /// Largest row norm.
  double max_norm() const;
  /// Throws DomainError if labels are not +-1 or a row exceeds R.
  void validate() const;
  /// Rows [first, first+count) as a new dataset sharing R.
  Dataset slice(int first, int count) const;
};

/// Noisy XOR: uniform over {(1,0),(0,1),(-1,0),(0,-1)} x {-1,1}^(d-2),
/// scaled by 1/sqrt(d-1); y = -1 iff the first coordinate is zero. R = 1.
Dataset gen_xor(int d, int n, std::uint64_t seed);

/// Every point of the noisy XOR support (2^d rows), in lexicographic order.
Dataset xor_support(int d);

struct LinsepSample {
  Dataset data;
  Vec v_star;  // unit planted direction
};

/// Points on the unit sphere with y_i <v*, x_i> >= gamma for a planted unit
/// v*. Points that fall inside the margin band are pushed out along v*
/// (component along v* redrawn in [gamma, 1), orthogonal part rescaled).
LinsepSample gen_linsep(int d, double gamma, int n, std::uint64_t seed);

/// Points for a given planted direction; used for held-out sets and for
/// resampled training sets from one distribution.
LinsepSample gen_linsep_with(std::span<const double> v_star, double gamma,
                             int n, std::uint64_t seed);

/// Reads "label,feat1,...,featd" rows (no header). R is the observed max
/// norm. Throws ParseError naming the offending line.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace sbwc
