#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivbounds/core.hpp"

namespace ivbounds {

/// Level names for Z, X and Y. An empty vector means "integer levels".
struct LevelLabels {
  std::vector<std::string> z;
  std::vector<std::string> x;
  std::vector<std::string> y;
};

/// Count table over (z, x, y). Immutable once constructed.
class Dataset {
 public:
  /// `counts` is indexed by ((z-1) * K + (x-1)) * M + (y-1).
  Dataset(Dims dims, std::vector<std::uint64_t> counts, LevelLabels labels = {});

  const Dims& dims() const { return dims_; }
  const LevelLabels& labels() const { return labels_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::uint64_t count(int z, int x, int y) const;
  std::uint64_t arm_size(int z) const;

  /// Resolves a level token (label or 1-based integer) for variable 'z', 'x' or 'y'.
  int level(char variable, const std::string& token) const;
  /// Display name of a level: its label if one exists, else the integer.
  std::string level_name(char variable, int level) const;

 private:
  Dims dims_;
  std::vector<std::uint64_t> counts_;
  LevelLabels labels_;
};

/// Per-arm empirical distributions. Throws ZeroArm if any arm is empty.
std::vector<ObservedDistribution> empirical_distributions(const Dataset& ds);

/// Removes a treatment level (its counts are discarded, arms renormalize
/// implicitly). Conditioning on X like this breaks the instrument assumptions.
Dataset drop_treatment(const Dataset& ds, int x);

/// Removes an instrument arm.
Dataset drop_arm(const Dataset& ds, int z);

/// Parses the `z,x,y,count` CSV format. Lines starting with '#' are comments,
/// except for two directives:
///   # levels <z|x|y> = a, b, c     declares label order for a column
///   # dims Q=3 K=3 M=2             declares sizes beyond the observed levels
Dataset parse_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);

/// Parses `{ "dims": {...}, "counts": [[z,x,y,count],...], "labels": {...} }`.
Dataset parse_json(const std::string& text);
Dataset read_json(const std::filesystem::path& path);

/// Dispatches on the file extension (.json, otherwise CSV).
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace ivbounds
