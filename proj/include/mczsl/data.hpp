#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mczsl/numerics.hpp"
#include "mczsl/rng.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

struct DatasetMeta {
  std::string name;
  Index feat_dim = 0;
  Index attr_dim = 0;
  Index num_classes = 0;
  Index num_seen = 0;
  Index num_unseen = 0;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// AWA1, AWA2, CUB, SUN and aPY with their standard ResNet-101 feature width,
/// attribute width and seen/unseen class counts.
std::span<const DatasetMeta> dataset_registry();
/// Case-sensitive lookup; nullopt for names outside the registry.
std::optional<DatasetMeta> find_dataset(std::string_view name);

/// In-memory copy of a CZSF file.
struct DatasetContainer {
  Dense2D features;           // n x d, raw unnormalized activations
  std::vector<int> labels;    // n, each < C
  Dense2D attributes;         // C x z
  std::vector<Index> train;   // sample indices
  std::vector<Index> test_seen;
  std::vector<Index> test_unseen;

  Index num_samples() const { return features.rows(); }
  Index feat_dim() const { return features.cols(); }
  Index num_classes() const { return attributes.rows(); }
  Index attr_dim() const { return attributes.cols(); }

  /// Throws DataError(invariant_violation) naming the first broken invariant.
  void validate() const;

  friend bool operator==(const DatasetContainer&, const DatasetContainer&) = default;
};

/// CZSF v1 layout, little-endian:
///
///   "CZSF"  u32 version = 1
///   u32 n  u32 d  u32 C  u32 z
///   u32 n_train  u32 n_test_seen  u32 n_test_unseen
///   f32 features[n*d] (row-major)  u32 labels[n]  f32 attributes[C*z]
///   u32 train[n_train]  u32 test_seen[..]  u32 test_unseen[..]
inline constexpr std::uint32_t kContainerVersion = 1;

DatasetContainer read_container(const std::filesystem::path& path);
void write_container(const DatasetContainer& c, const std::filesystem::path& path);
/// Exact bytes write_container would produce.
std::vector<char> encode_container(const DatasetContainer& c);

/// Seen classes own training samples; unseen classes only appear in test_unseen.
struct ClassPartition {
  std::vector<int> seen;
  std::vector<int> unseen;
};

ClassPartition gzsl_partition(const DatasetContainer& c);

struct SynthSpec {
  Index n_seen = 20;
  Index n_unseen = 5;
  Index feat_dim = 64;
  Index attr_dim = 16;
  double noise_sigma = 0.1;
  Index samples_per_class = 50;
  double test_fraction = 0.2;  // share of each seen class held out as test_seen
};

/// Classes 0..n_seen-1 are seen, the rest unseen. Attributes are uniform on the
/// unit sphere; a fixed linear map W* with N(0, 1) entries sends each class
/// attribute to its feature centre, and every sample adds N(0, noise_sigma^2)
/// noise per coordinate. Samples are stored class by class.
DatasetContainer synth_dataset(const SynthSpec& spec, Rng& rng);

DatasetMeta meta_of(const DatasetContainer& c, std::string name = {});

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
