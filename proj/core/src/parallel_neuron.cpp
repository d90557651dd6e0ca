#include "pcsnn/parallel_neuron.hpp"

#include <algorithm>

#include "pcsnn/activation.hpp"

namespace pcsnn {

std::int64_t ParallelNeuronParams::channels() const noexcept {
  std::int64_t c = 1;
  if (shift.rank() == 2) c = std::max(c, shift.shape()[1]);
  c = std::max<std::int64_t>(c, static_cast<std::int64_t>(theta_pre.size()));
  c = std::max<std::int64_t>(c, static_cast<std::int64_t>(theta_post.size()));
  return c;
}

float ParallelNeuronParams::shift_at(int step, std::int64_t channel) const noexcept {
  if (shift.rank() == 1) return shift[static_cast<std::size_t>(step - 1)];
  const auto c = shift.shape()[1];
  return shift[static_cast<std::size_t>((step - 1) * c + (c == 1 ? 0 : channel))];
}

float ParallelNeuronParams::pre_at(std::int64_t channel) const noexcept { return channel_value(theta_pre, channel); }

float ParallelNeuronParams::post_at(std::int64_t channel) const noexcept { return channel_value(theta_post, channel); }

void ParallelNeuronParams::validate() const {
  if (steps < 1) throw Error("parallel neuron needs T >= 1, got " + std::to_string(steps));
  const auto c = channels();
  const bool shift_ok = (shift.rank() == 1 && shift.dim(0) == steps) ||
                        (shift.rank() == 2 && shift.dim(0) == steps && (shift.dim(1) == c || shift.dim(1) == 1));
  if (!shift_ok) {
    throw Error("shift vector shape " + to_string(shift.shape()) + " does not fit T=" + std::to_string(steps) +
                ", C=" + std::to_string(c));
  }
  for (const Tensor* t : {&theta_pre, &theta_post}) {
    const bool ok = (t->rank() == 0 && t->size() == 1) || (t->rank() == 1 && t->dim(0) == c);
    if (!ok) throw Error("threshold shape " + to_string(t->shape()) + " does not fit C=" + std::to_string(c));
    for (float v : t->data()) {
      if (!(v > 0.0f)) throw Error("parallel neuron thresholds must be positive");
    }
  }
  if (!shift.all_finite()) throw Error("shift vector is not finite");
}

// --- SpikeTrain -------------------------------------------------------------

SpikeTrain SpikeTrain::from_first_fire(int steps, std::vector<int> first_fire) {
  SpikeTrain s;
  s.steps_ = steps;
  s.units_ = first_fire.size();
  for (int f : first_fire) {
    if (f < 1 || f > steps + 1) throw Error("first firing step out of range: " + std::to_string(f));
  }
  s.first_fire_ = std::move(first_fire);
  return s;
}

SpikeTrain SpikeTrain::from_bits(int steps, std::size_t units, std::vector<std::uint8_t> bits) {
  if (bits.size() != static_cast<std::size_t>(steps) * units) throw Error("spike bit count does not match T x units");
  for (auto b : bits) {
    if (b > 1) throw Error("spike entries must be 0 or 1");
  }
  SpikeTrain s;
  s.steps_ = steps;
  s.units_ = units;
  s.bits_ = std::move(bits);
  s.dense_ = true;
  return s;
}

bool SpikeTrain::fires(int step, std::size_t unit) const {
  if (dense_) return bits_[static_cast<std::size_t>(step - 1) * units_ + unit] != 0;
  return step >= first_fire_[unit];
}

int SpikeTrain::count(std::size_t unit) const {
  if (!dense_) return steps_ + 1 - first_fire_[unit];
  int n = 0;
  for (int x = 1; x <= steps_; ++x) n += bits_[static_cast<std::size_t>(x - 1) * units_ + unit];
  return n;
}

std::uint64_t SpikeTrain::total_spikes() const {
  std::uint64_t n = 0;
  for (std::size_t u = 0; u < units_; ++u) n += static_cast<std::uint64_t>(count(u));
  return n;
}

int SpikeTrain::first_fire(std::size_t unit) const {
  if (!dense_) return first_fire_[unit];
  for (int x = 1; x <= steps_; ++x) {
    if (fires(x, unit)) return x;
  }
  return steps_ + 1;
}

std::vector<std::uint8_t> SpikeTrain::materialize() const {
  if (dense_) return bits_;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(steps_) * units_, 0);
  for (std::size_t u = 0; u < units_; ++u)
    for (int x = first_fire_[u]; x <= steps_; ++x) bits[static_cast<std::size_t>(x - 1) * units_ + u] = 1;
  return bits;
}

bool SpikeTrain::is_sorted() const {
  if (!dense_) return true;
  for (std::size_t u = 0; u < units_; ++u)
    for (int x = 2; x <= steps_; ++x)
      if (fires(x - 1, u) && !fires(x, u)) return false;
  return true;
}

// --- serial oracle ----------------------------------------------------------

IntegrateFireLayer::IntegrateFireLayer(std::vector<double> v0, std::vector<float> theta, double leak)
    : v_(std::move(v0)), theta_(std::move(theta)), leak_(leak) {
  if (theta_.size() != v_.size() && theta_.size() != 1) throw Error("IF layer threshold count mismatch");
  for (float t : theta_) {
    if (!(t > 0.0f)) throw Error("IF threshold must be positive");
  }
  if (!(leak_ >= 0.0 && leak_ <= 1.0)) throw Error("IF leak must lie in [0, 1]");
}

void IntegrateFireLayer::step(std::span<const float> current, std::span<std::uint8_t> spikes) {
  if (current.size() != v_.size() || spikes.size() != v_.size()) throw Error("IF layer step size mismatch");
  const bool shared = theta_.size() == 1;
  for (std::size_t u = 0; u < v_.size(); ++u) {
    const double theta = shared ? theta_[0] : theta_[u];
    const double v_pre = leak_ * v_[u] + current[u];
    const bool fire = v_pre >= theta;
    spikes[u] = fire ? 1 : 0;
    v_[u] = fire ? v_pre - theta : v_pre;
  }
}

SerialRun serial_if_run(const Tensor& current, float theta, double leak, std::span<const double> v0) {
  if (!(theta > 0.0f)) throw Error("serial_if_run: theta must be positive");
  if (current.rank() != 2) throw Error("serial_if_run expects current[T, units], got " + to_string(current.shape()));
  const auto steps = static_cast<int>(current.dim(0));
  const auto units = static_cast<std::size_t>(current.dim(1));
  if (v0.size() != units) throw Error("serial_if_run: v0 has " + std::to_string(v0.size()) + " entries, need " +
                                      std::to_string(units));
  IntegrateFireLayer layer({v0.begin(), v0.end()}, {theta}, leak);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(steps) * units);
  for (int t = 0; t < steps; ++t) {
    layer.step(current.data().subspan(t * units, units), std::span(bits).subspan(t * units, units));
  }
  return {SpikeTrain::from_bits(steps, units, std::move(bits)), {layer.potential().begin(), layer.potential().end()}};
}

SpikeTrain vanilla_parallel_run(const Tensor& current, double leak, float theta) {
  if (current.rank() != 2) throw Error("vanilla_parallel_run expects current[T, units]");
  const auto steps = static_cast<int>(current.dim(0));
  const auto units = static_cast<std::size_t>(current.dim(1));
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(steps) * units);
  for (std::size_t u = 0; u < units; ++u) {
    for (int t = 0; t < steps; ++t) {
      double v = 0.0;
      double w = 1.0;  // leak^(t - i), walking i downwards from t
      for (int i = t; i >= 0; --i) {
        v += w * current[static_cast<std::size_t>(i) * units + u];
        w *= leak;
      }
      bits[static_cast<std::size_t>(t) * units + u] = v >= theta ? 1 : 0;
    }
  }
  return SpikeTrain::from_bits(steps, units, std::move(bits));
}

// --- conversion matrix and shift --------------------------------------------

Tensor pc_coefficients(int steps) {
  if (steps < 1) throw Error("pc_coefficients needs T >= 1");
  Tensor c({steps});
  for (int x = 1; x <= steps; ++x) c[x - 1] = static_cast<float>(static_cast<double>(steps) / (x * (steps - x + 1.0)));
  return c;
}

Tensor pc_matrix(int steps) {
  if (steps < 1) throw Error("pc_matrix needs T >= 1");
  Tensor m({steps, steps});
  for (int x = 1; x <= steps; ++x) {
    const auto v = static_cast<float>(1.0 / (steps - x + 1));
    for (int j = 0; j < steps; ++j) m[static_cast<std::size_t>((x - 1) * steps + j)] = v;
  }
  return m;
}

Tensor shift_vector(const Tensor& theta, const Tensor& psi, const Tensor& psi_da, int steps) {
  if (steps < 1) throw Error("shift_vector needs T >= 1");
  for (float t : theta.data()) {
    if (!(t > 0.0f)) throw Error("shift_vector: theta must be positive");
  }
  const std::size_t c = std::max({theta.size(), psi.size(), psi_da.size()});
  for (const Tensor* p : {&theta, &psi, &psi_da}) {
    if (p->size() != 1 && p->size() != c) throw Error("shift_vector: inconsistent channel counts");
  }
  const bool scalar = theta.rank() == 0 && psi.rank() == 0 && psi_da.rank() == 0;
  Tensor b = scalar ? Tensor({steps}) : Tensor({steps, static_cast<std::int64_t>(c)});
  for (int x = 1; x <= steps; ++x) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const auto cc = static_cast<std::int64_t>(ch);
      const double total = static_cast<double>(channel_value(psi, cc)) +
                           static_cast<double>(channel_value(psi_da, cc)) * steps;
      b[static_cast<std::size_t>(x - 1) * c + ch] = static_cast<float>(total / (steps - x + 1));
    }
  }
  return b;
}

Tensor shift_vector(const Tensor& theta, const Tensor& psi_da, int steps) {
  return shift_vector(theta, half_of(theta), psi_da, steps);
}

// --- firing paths ------------------------------------------------------------

std::vector<float> temporal_sum(const Tensor& current) {
  if (current.rank() != 2) throw Error("expected current[T, units], got " + to_string(current.shape()));
  const auto steps = current.dim(0);
  const auto units = static_cast<std::size_t>(current.dim(1));
  std::vector<float> sums(units);
  for (std::size_t u = 0; u < units; ++u) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < steps; ++t) acc += current[static_cast<std::size_t>(t) * units + u];
    sums[u] = static_cast<float>(acc);
  }
  return sums;
}

namespace {

void check_fire_inputs(const ParallelNeuronParams& params, std::size_t units, std::int64_t spatial) {
  params.validate();
  if (spatial < 1) throw Error("spatial block size must be >= 1");
  const auto c = params.channels();
  if (c > 1 && units % static_cast<std::size_t>(c * spatial) != 0) {
    throw Error(std::to_string(units) + " units do not split into " + std::to_string(c) + " channels of " +
                std::to_string(spatial));
  }
}

std::int64_t channel_of(std::size_t unit, std::int64_t spatial, std::int64_t channels) noexcept {
  return (static_cast<std::int64_t>(unit) / spatial) % channels;
}

}  // namespace

SpikeTrain pc_fire_full(const Tensor& current, const ParallelNeuronParams& params, std::int64_t spatial) {
  if (current.rank() != 2 || current.dim(0) != params.steps) {
    throw Error("pc_fire_full expects current[" + std::to_string(params.steps) + ", units], got " +
                to_string(current.shape()));
  }
  const auto units = static_cast<std::size_t>(current.dim(1));
  check_fire_inputs(params, units, spatial);
  const auto sums = temporal_sum(current);
  const auto c = params.channels();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(params.steps) * units);
  for (std::size_t u = 0; u < units; ++u) {
    const auto ch = channel_of(u, spatial, c);
    for (int x = 1; x <= params.steps; ++x) {
      bits[static_cast<std::size_t>(x - 1) * units + u] = fires_at(sums[u], params, x, ch) ? 1 : 0;
    }
  }
  return SpikeTrain::from_bits(params.steps, units, std::move(bits));
}

int first_fire_step(float current_sum, const ParallelNeuronParams& params, std::int64_t channel, int& evaluations) {
  int lo = 1;
  int hi = params.steps;
  bool hi_fires = false;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    ++evaluations;
    if (fires_at(current_sum, params, mid, channel)) {
      hi = mid;
      hi_fires = true;
    } else {
      lo = mid + 1;
    }
  }
  if (hi_fires) return lo;
  // Nothing in the search fired, so step T itself is still untested.
  ++evaluations;
  return fires_at(current_sum, params, lo, channel) ? lo : params.steps + 1;
}

FastFire pc_fire_fast(std::span<const float> current_sum, const ParallelNeuronParams& params, std::int64_t spatial) {
  check_fire_inputs(params, current_sum.size(), spatial);
  const auto c = params.channels();
  FastFire out;
  out.first_fire.resize(current_sum.size());
  for (std::size_t u = 0; u < current_sum.size(); ++u) {
    int evals = 0;
    out.first_fire[u] = first_fire_step(current_sum[u], params, channel_of(u, spatial, c), evals);
    out.evaluations += static_cast<std::uint64_t>(evals);
    out.max_evaluations = std::max(out.max_evaluations, evals);
  }
  out.spikes = SpikeTrain::from_first_fire(params.steps, out.first_fire);
  return out;
}

Tensor rate_from_spikes(const SpikeTrain& spikes, const Tensor& theta_post, std::int64_t spatial) {
  const auto units = spikes.units();
  const auto c = static_cast<std::int64_t>(theta_post.size());
  if (c == 0) throw Error("rate_from_spikes: empty theta_post");
  if (spatial < 1 || (c > 1 && units % static_cast<std::size_t>(c * spatial) != 0)) {
    throw Error("rate_from_spikes: theta_post does not fit the unit layout");
  }
  Tensor r({static_cast<std::int64_t>(units)});
  for (std::size_t u = 0; u < units; ++u) {
    const auto ch = c == 1 ? 0 : channel_of(u, spatial, c);
    r[u] = quantized_rate(spikes.count(u), channel_value(theta_post, ch), spikes.steps());
  }
  return r;
}

}  // namespace pcsnn
