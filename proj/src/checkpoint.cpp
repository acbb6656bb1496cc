#include "mczsl/checkpoint.hpp"

#include "binary_io.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

std::uint32_t encode(Normalization n) {
  switch (n) {
    case Normalization::none: return 0;
    case Normalization::plain_cn: return 1;
    case Normalization::scn: return 2;
  }
  return 2;
}

Normalization decode_normalization(std::uint32_t v, const std::string& name) {
  switch (v) {
    case 0: return Normalization::none;
    case 1: return Normalization::plain_cn;
    case 2: return Normalization::scn;
    default:
      throw DataError(DataErrorKind::invariant_violation, name + ": unknown normalization code");
  }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const ModelConfig& cfg = params.config();
  detail::BinaryWriter w;
  w.magic("MCZP");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.attr_dim()));
  w.u32(static_cast<std::uint32_t>(params.feat_dim()));
  w.u32(static_cast<std::uint32_t>(params.hidden_width()));
  w.u32(cfg.disable_self_gating ? 1u : 0u);
  w.u32(encode(cfg.normalization));
  w.f32(static_cast<float>(cfg.logit_scale));
  w.u64(cfg.init_seed);
  w.u32(static_cast<std::uint32_t>(kTensorCount));
  for (const TensorSlot& s : params.layout().slots()) {
    w.u32(static_cast<std::uint32_t>(s.rows));
    w.u32(static_cast<std::uint32_t>(s.cols));
  }
  w.u64(params.size());
  w.f32_array(params.values());
  w.save(path);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::BinaryReader::open(path);
  r.expect_magic("MCZP");
  r.expect_version(kCheckpointVersion);
  const Index attr_dim = r.u32();
  const Index feat_dim = r.u32();
  ModelConfig cfg;
  cfg.hidden_width = r.u32();
  const std::uint32_t flags = r.u32();
  if (flags > 1) throw DataError(DataErrorKind::invariant_violation, r.name() + ": unknown flags");
  cfg.disable_self_gating = (flags & 1u) != 0;
  cfg.normalization = decode_normalization(r.u32(), r.name());
  cfg.logit_scale = static_cast<Real>(r.f32());
  cfg.init_seed = r.u64();
  if (attr_dim == 0 || feat_dim == 0 || cfg.hidden_width == 0) {
    throw DataError(DataErrorKind::invariant_violation, r.name() + ": zero dimension");
  }
  ModelParams params(cfg, attr_dim, feat_dim);
  if (r.u32() != kTensorCount) {
    throw DataError(DataErrorKind::invariant_violation, r.name() + ": unexpected tensor count");
  }
  for (const TensorSlot& s : params.layout().slots()) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != s.rows || cols != s.cols) {
      throw DataError(DataErrorKind::invariant_violation,
                      r.name() + ": shape table disagrees with header for " + std::string(s.name));
    }
  }
  const std::uint64_t count = r.u64();
  if (count != params.size()) {
    throw DataError(DataErrorKind::invariant_violation, r.name() + ": value count mismatch");
  }
  const auto values = r.f32_array<Real>(count);
  r.expect_end();
  if (!all_finite(values)) {
    throw DataError(DataErrorKind::invariant_violation, r.name() + ": non-finite parameter");
  }
  params.unflatten(values);
  return params;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
