#include "mczsl/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "binary_io.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

const std::array<DatasetMeta, 5> kRegistry = {{
    {"AWA1", 2048, 85, 50, 40, 10},
    {"AWA2", 2048, 85, 50, 40, 10},
    {"CUB", 2048, 312, 200, 150, 50},
    {"SUN", 2048, 102, 717, 645, 72},
    {"aPY", 2048, 64, 32, 20, 12},
}};

[[noreturn]] void violation(const std::string& what) {
  throw DataError(DataErrorKind::invariant_violation, what);
}

}  // namespace

std::span<const DatasetMeta> dataset_registry() { return kRegistry; }

std::optional<DatasetMeta> find_dataset(std::string_view name) {
  for (const auto& m : kRegistry) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

void DatasetContainer::validate() const {
  const Index n = num_samples();
  if (labels.size() != n) violation("labels length " + std::to_string(labels.size()) +
                                    " != sample count " + std::to_string(n));
  if (n > 0 && feat_dim() == 0) violation("feature width is zero");
  if (num_classes() == 0 || attr_dim() == 0) violation("empty attribute matrix");
  for (Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<Index>(labels[i]) >= num_classes()) {
      violation("label " + std::to_string(labels[i]) + " at sample " + std::to_string(i) +
                " outside [0, " + std::to_string(num_classes()) + ")");
    }
  }
  if (!all_finite(attributes.data())) violation("non-finite attribute value");
  if (!all_finite(features.data())) violation("non-finite feature value");
  std::vector<char> owner(n, 0);
  const std::array<const std::vector<Index>*, 3> splits = {&train, &test_seen, &test_unseen};
  for (const auto* split : splits) {
    for (Index idx : *split) {
      if (idx >= n) violation("split index " + std::to_string(idx) + " out of range");
      if (owner[idx]) violation("sample " + std::to_string(idx) + " listed in two splits");
      owner[idx] = 1;
    }
  }
}

std::vector<char> encode_container(const DatasetContainer& c) {
  c.validate();
  detail::BinaryWriter w;
  w.magic("CZSF");
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(c.num_samples()));
  w.u32(static_cast<std::uint32_t>(c.feat_dim()));
  w.u32(static_cast<std::uint32_t>(c.num_classes()));
  w.u32(static_cast<std::uint32_t>(c.attr_dim()));
  w.u32(static_cast<std::uint32_t>(c.train.size()));
  w.u32(static_cast<std::uint32_t>(c.test_seen.size()));
  w.u32(static_cast<std::uint32_t>(c.test_unseen.size()));
  w.f32_array(c.features.data());
  w.u32_array(std::span<const int>(c.labels));
  w.f32_array(c.attributes.data());
  w.u32_array(std::span<const Index>(c.train));
  w.u32_array(std::span<const Index>(c.test_seen));
  w.u32_array(std::span<const Index>(c.test_unseen));
  return w.bytes();
}

void write_container(const DatasetContainer& c, const std::filesystem::path& path) {
  const auto bytes = encode_container(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataErrorKind::io, "write failed for '" + path.string() + "'");
}

DatasetContainer read_container(const std::filesystem::path& path) {
  auto r = detail::BinaryReader::open(path);
  r.expect_magic("CZSF");
  r.expect_version(kContainerVersion);
  const std::uint64_t n = r.u32();
  const std::uint64_t d = r.u32();
  const std::uint64_t classes = r.u32();
  const std::uint64_t z = r.u32();
  const std::uint64_t n_train = r.u32();
  const std::uint64_t n_seen = r.u32();
  const std::uint64_t n_unseen = r.u32();
  // Check the whole payload length before allocating anything large.
  const std::uint64_t payload = n * d + n + classes * z + n_train + n_seen + n_unseen;
  r.need_elements(payload, 4);

  DatasetContainer c;
  c.features = Dense2D(n, d, r.f32_array<Real>(n * d));
  const auto labels = r.u32_array(n);
  c.labels.assign(labels.begin(), labels.end());
  for (Index i = 0; i < n; ++i) {
    if (labels[i] >= classes) violation(r.name() + ": label out of range");
  }
  c.attributes = Dense2D(classes, z, r.f32_array<Real>(classes * z));
  auto to_index = [](const std::vector<std::uint32_t>& v) {
    return std::vector<Index>(v.begin(), v.end());
  };
  c.train = to_index(r.u32_array(n_train));
  c.test_seen = to_index(r.u32_array(n_seen));
  c.test_unseen = to_index(r.u32_array(n_unseen));
  r.expect_end();
  c.validate();
  return c;
}

ClassPartition gzsl_partition(const DatasetContainer& c) {
  std::set<int> seen;
  std::set<int> unseen;
  for (Index i : c.train) seen.insert(c.labels[i]);
  for (Index i : c.test_seen) seen.insert(c.labels[i]);
  for (Index i : c.test_unseen) {
    if (!seen.contains(c.labels[i])) unseen.insert(c.labels[i]);
  }
  return {std::vector<int>(seen.begin(), seen.end()),
          std::vector<int>(unseen.begin(), unseen.end())};
}

DatasetContainer synth_dataset(const SynthSpec& spec, Rng& rng) {
  if (spec.attr_dim == 0 || spec.feat_dim < spec.attr_dim) {
    throw std::invalid_argument("synth_dataset: need feat_dim >= attr_dim >= 1");
  }
  if (spec.n_seen == 0 || spec.samples_per_class == 0) {
    throw std::invalid_argument("synth_dataset: need at least one seen class and one sample");
  }
  if (!(spec.noise_sigma >= 0) || !(spec.test_fraction >= 0 && spec.test_fraction < 1)) {
    throw std::invalid_argument("synth_dataset: noise_sigma >= 0 and test_fraction in [0, 1)");
  }
  const Index classes = spec.n_seen + spec.n_unseen;
  const Index z = spec.attr_dim;
  const Index d = spec.feat_dim;
  const Index per_class = spec.samples_per_class;

  DatasetContainer c;
  c.attributes = Dense2D(classes, z);
  for (Index k = 0; k < classes; ++k) {
    auto row = c.attributes.row(k);
    double sq = 0.0;
    do {
      sq = 0.0;
      for (Real& v : row) {
        v = static_cast<Real>(rng.normal());
        sq += static_cast<double>(v) * v;
      }
    } while (sq == 0.0);
    const double inv = 1.0 / std::sqrt(sq);
    for (Real& v : row) v = static_cast<Real>(v * inv);
  }

  Dense2D map(d, z);
  for (Real& v : map.data()) v = static_cast<Real>(rng.normal());
  const Dense2D centres = matmul_nt(c.attributes, map);  // C x d

  c.features = Dense2D(classes * per_class, d);
  c.labels.resize(classes * per_class);
  Index n_test = static_cast<Index>(std::floor(static_cast<double>(per_class) * spec.test_fraction + 0.5));
  if (per_class >= 2) n_test = std::clamp<Index>(n_test, spec.test_fraction > 0 ? 1 : 0, per_class - 1);
  else n_test = 0;
  for (Index k = 0; k < classes; ++k) {
    const auto centre = centres.row(k);
    for (Index s = 0; s < per_class; ++s) {
      const Index i = k * per_class + s;
      auto row = c.features.row(i);
      for (Index j = 0; j < d; ++j) {
        row[j] = static_cast<Real>(centre[j] + spec.noise_sigma * rng.normal());
      }
      c.labels[i] = static_cast<int>(k);
      if (k >= spec.n_seen) {
        c.test_unseen.push_back(i);
      } else if (s + n_test >= per_class) {
        c.test_seen.push_back(i);
      } else {
        c.train.push_back(i);
      }
    }
  }
  c.validate();
  return c;
}

DatasetMeta meta_of(const DatasetContainer& c, std::string name) {
  const ClassPartition part = gzsl_partition(c);
  return {std::move(name), c.feat_dim(), c.attr_dim(), c.num_classes(), part.seen.size(),
          part.unseen.size()};
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
