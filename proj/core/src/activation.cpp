#include "pcsnn/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcsnn {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::ClipReLU: return "clip_relu";
    case ActivationKind::QCFS: return "qcfs";
    case ActivationKind::DAQCFS: return "da_qcfs";
  }
  return "?";
}

ActivationKind parse_activation_kind(std::string_view name) {
  if (name == "relu") return ActivationKind::ReLU;
  if (name == "clip_relu") return ActivationKind::ClipReLU;
  if (name == "qcfs") return ActivationKind::QCFS;
  if (name == "da_qcfs") return ActivationKind::DAQCFS;
  throw Error("unknown activation variant '" + std::string(name) + "'");
}

ActivationSpec ActivationSpec::relu() { return {}; }

ActivationSpec ActivationSpec::clip_relu(Tensor theta) {
  ActivationSpec s;
  s.kind = ActivationKind::ClipReLU;
  s.theta = std::move(theta);
  return s;
}

ActivationSpec ActivationSpec::qcfs(Tensor theta, int levels) {
  Tensor psi = half_of(theta);
  return qcfs(std::move(theta), levels, std::move(psi));
}

ActivationSpec ActivationSpec::qcfs(Tensor theta, int levels, Tensor psi) {
  ActivationSpec s;
  s.kind = ActivationKind::QCFS;
  s.theta = std::move(theta);
  s.levels = levels;
  s.psi = std::move(psi);
  return s;
}

ActivationSpec ActivationSpec::da_qcfs(Tensor theta, int levels, Tensor psi, Tensor psi_da, Tensor phi_da) {
  ActivationSpec s;
  s.kind = ActivationKind::DAQCFS;
  s.theta = std::move(theta);
  s.levels = levels;
  s.psi = std::move(psi);
  s.psi_da = std::move(psi_da);
  s.phi_da = std::move(phi_da);
  return s;
}

namespace {

void check_param(const Tensor& p, std::int64_t channels, const char* name) {
  const bool ok = (p.rank() == 0 && p.size() == 1) || (p.rank() == 1 && p.dim(0) == channels);
  if (!ok) {
    throw Error(std::string("activation parameter ") + name + " has shape " + to_string(p.shape()) +
                ", expected scalar or [" + std::to_string(channels) + "]");
  }
  if (!p.all_finite()) throw Error(std::string("activation parameter ") + name + " is not finite");
}

}  // namespace

void ActivationSpec::validate(std::int64_t channels) const {
  if (kind == ActivationKind::ReLU) return;
  check_param(theta, channels, "theta");
  for (float t : theta.data()) {
    if (!(t > 0.0f)) throw Error("activation theta must be positive");
  }
  if (kind == ActivationKind::ClipReLU) return;
  if (levels < 1) throw Error("quantization level count must be >= 1, got " + std::to_string(levels));
  check_param(psi, channels, "psi");
  if (kind == ActivationKind::QCFS) return;
  check_param(psi_da, channels, "psi_da");
  check_param(phi_da, channels, "phi_da");
  const auto c = static_cast<std::int64_t>(std::max(theta.size(), phi_da.size()));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    if (!(post_threshold(channel_value(theta, ch), channel_value(phi_da, ch)) > 0.0f)) {
      throw Error("theta + phi_da must be positive (channel " + std::to_string(ch) + ")");
    }
  }
}

Tensor half_of(const Tensor& theta) {
  Tensor out(theta.shape());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] * 0.5f;
  return out;
}

int qcfs_level(double a, double theta, int levels, double psi) noexcept {
  const double q = std::floor((a * levels + psi) / theta);
  if (!(q > 0.0)) return 0;
  if (q >= levels) return levels;
  return static_cast<int>(q);
}

float quantized_rate(int count, float amplitude, int steps) noexcept {
  return static_cast<float>(static_cast<double>(amplitude) * count / steps);
}

namespace {

// Channel index of flat element i for a per-channel parameter of size C.
struct ChannelIndexer {
  std::int64_t channels = 1;
  std::int64_t spatial = 1;

  ChannelIndexer(const Shape& shape, std::size_t param_size) {
    if (param_size <= 1) return;
    if (shape.size() >= 2) {
      channels = shape[1];
      spatial = spatial_size(shape);
    } else if (shape.size() == 1) {
      channels = shape[0];
    } else {
      throw Error("per-channel activation parameter applied to a scalar tensor");
    }
    if (channels != static_cast<std::int64_t>(param_size)) {
      throw Error("activation parameter has " + std::to_string(param_size) + " channels, input " + to_string(shape) +
                  " has " + std::to_string(channels));
    }
  }

  std::int64_t operator()(std::size_t i) const noexcept {
    return (static_cast<std::int64_t>(i) / spatial) % channels;
  }
};

std::size_t widest(std::initializer_list<const Tensor*> params) {
  std::size_t w = 1;
  for (const Tensor* p : params) w = std::max(w, p->size());
  return w;
}

void require_levels(int levels) {
  if (levels < 1) throw Error("quantization level count must be >= 1, got " + std::to_string(levels));
}

void require_positive(const Tensor& theta, const char* what) {
  if (theta.empty()) throw Error(std::string(what) + " is empty");
  for (float t : theta.data()) {
    if (!(t > 0.0f)) throw Error(std::string(what) + " must be positive");
  }
}

}  // namespace

Tensor relu(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], 0.0f);
  return out;
}

Tensor clip_relu(const Tensor& a, const Tensor& theta) {
  require_positive(theta, "clip_relu theta");
  const ChannelIndexer ch(a.shape(), theta.size());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(std::max(a[i], 0.0f), channel_value(theta, ch(i)));
  return out;
}

Tensor qcfs(const Tensor& a, const Tensor& theta, int levels, const Tensor& psi) {
  require_levels(levels);
  require_positive(theta, "qcfs theta");
  const ChannelIndexer ch(a.shape(), widest({&theta, &psi}));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto c = ch(i);
    const float t = channel_value(theta, c);
    out[i] = quantized_rate(qcfs_level(a[i], t, levels, channel_value(psi, c)), t, levels);
  }
  return out;
}

Tensor da_qcfs(const Tensor& a, const Tensor& theta, int levels, const Tensor& psi, const Tensor& psi_da,
               const Tensor& phi_da) {
  require_levels(levels);
  require_positive(theta, "da_qcfs theta");
  const ChannelIndexer ch(a.shape(), widest({&theta, &psi, &psi_da, &phi_da}));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto c = ch(i);
    const float t = channel_value(theta, c);
    const float amp = post_threshold(t, channel_value(phi_da, c));
    if (!(amp > 0.0f)) throw Error("da_qcfs requires theta + phi_da > 0 (channel " + std::to_string(c) + ")");
    const double shifted = static_cast<double>(a[i]) + channel_value(psi_da, c);
    out[i] = quantized_rate(qcfs_level(shifted, t, levels, channel_value(psi, c)), amp, levels);
  }
  return out;
}

Tensor apply_activation(const ActivationSpec& spec, const Tensor& a) {
  switch (spec.kind) {
    case ActivationKind::ReLU: return relu(a);
    case ActivationKind::ClipReLU: return clip_relu(a, spec.theta);
    case ActivationKind::QCFS: return qcfs(a, spec.theta, spec.levels, spec.psi);
    case ActivationKind::DAQCFS: return da_qcfs(a, spec.theta, spec.levels, spec.psi, spec.psi_da, spec.phi_da);
  }
  throw Error("unhandled activation kind");
}

double level_boundary_distance(double a, double theta, int levels, double psi, double psi_da) noexcept {
  // Boundaries sit at a_k = (k*theta - psi)/levels - psi_da; pick the nearest k.
  const double k_real = ((a + psi_da) * levels + psi) / theta;
  double best = std::numeric_limits<double>::infinity();
  const double base = std::clamp(std::floor(k_real), 1.0, static_cast<double>(levels));
  for (double k = base - 1; k <= base + 2; k += 1.0) {
    if (k < 1 || k > levels) continue;
    const double ak = (k * theta - psi) / levels - psi_da;
    best = std::min(best, std::abs(a - ak));
  }
  return best;
}

double min_relative_boundary_distance(const ActivationSpec& spec, const Tensor& pre) {
  double best = std::numeric_limits<double>::infinity();
  if (spec.kind != ActivationKind::QCFS && spec.kind != ActivationKind::DAQCFS) return best;
  const bool da = spec.kind == ActivationKind::DAQCFS;
  const ChannelIndexer ch(pre.shape(), da ? widest({&spec.theta, &spec.psi, &spec.psi_da}) : widest({&spec.theta, &spec.psi}));
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const auto c = ch(i);
    const double t = channel_value(spec.theta, c);
    const double d = level_boundary_distance(pre[i], t, spec.levels, channel_value(spec.psi, c),
                                             da ? channel_value(spec.psi_da, c) : 0.0);
    best = std::min(best, d / t);
  }
  return best;
}

}  // namespace pcsnn
