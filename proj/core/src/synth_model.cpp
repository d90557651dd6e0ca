#include "pcsnn/synth_model.hpp"

#include <cmath>
#include <string>

#include "rng.hpp"

namespace pcsnn {

std::string_view to_string(SynthArch a) {
  switch (a) {
    case SynthArch::MLP: return "mlp";
    case SynthArch::Conv: return "conv";
    case SynthArch::VGG: return "vgg";
    case SynthArch::ResNet: return "resnet";
  }
  return "?";
}

SynthArch parse_synth_arch(std::string_view name) {
  if (name == "mlp") return SynthArch::MLP;
  if (name == "conv") return SynthArch::Conv;
  if (name == "vgg") return SynthArch::VGG;
  if (name == "resnet") return SynthArch::ResNet;
  throw Error("unknown architecture '" + std::string(name) + "' (expected mlp, conv, vgg or resnet)");
}

namespace {

class Builder {
 public:
  Builder(const SynthModelConfig& cfg) : cfg_(cfg), g_(cfg.seed) { graph_.input_shape = cfg.input_shape; }

  Tensor he(Shape shape, std::int64_t fan_in) {
    Tensor w(std::move(shape));
    const double s = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w.data()) v = static_cast<float>(s * g_.next());
    return w;
  }

  Tensor bias(std::int64_t n) {
    Tensor b({n});
    for (auto& v : b.data()) v = static_cast<float>(cfg_.bias_scale * g_.next());
    return b;
  }

  void linear(std::int64_t in, std::int64_t out) {
    add("fc", Linear{he({out, in}, in), bias(out)});
  }

  void conv(std::int64_t in, std::int64_t out) {
    add("conv", Conv2d{he({out, in, 3, 3}, in * 9), bias(out), 1, 1});
  }

  void act(std::int64_t channels) {
    if (cfg_.activation == ActivationKind::ReLU) {
      add("act", Activation{ActivationSpec::relu()});
      return;
    }
    if (cfg_.activation != ActivationKind::QCFS) throw Error("synthetic models use QCFS or ReLU activations");
    Tensor theta = Tensor::scalar(cfg_.theta);
    if (cfg_.theta_jitter > 0.0f) {
      theta = Tensor({channels});
      for (auto& t : theta.data()) {
        t = static_cast<float>(cfg_.theta * g_.uniform(1.0 - cfg_.theta_jitter, 1.0 + cfg_.theta_jitter));
      }
    }
    add("act", Activation{ActivationSpec::qcfs(theta, cfg_.levels)});
  }

  void add(const std::string& kind, LayerOp op) {
    graph_.layers.push_back({kind + std::to_string(graph_.layers.size()), std::move(op)});
  }

  LayerGraph finish() {
    validate(graph_);
    return std::move(graph_);
  }

  const SynthModelConfig& cfg_;
  detail::GaussianStream g_;
  LayerGraph graph_;
};

void need_image(const SynthModelConfig& cfg) {
  if (cfg.input_shape.size() != 3) throw Error("conv architectures need a [C, H, W] input shape");
}

}  // namespace

LayerGraph make_synth_model(const SynthModelConfig& cfg) {
  if (cfg.depth < 1 || cfg.width < 1 || cfg.classes < 1) throw Error("depth, width and classes must be positive");
  if (cfg.activation == ActivationKind::QCFS && (cfg.levels < 1 || !(cfg.theta > 0.0f))) {
    throw Error("QCFS needs levels >= 1 and theta > 0");
  }
  if (cfg.theta_jitter < 0.0f || cfg.theta_jitter >= 1.0f) throw Error("theta jitter must be in [0, 1)");
  Builder b(cfg);
  const std::int64_t w = cfg.width;

  switch (cfg.arch) {
    case SynthArch::MLP: {
      if (cfg.input_shape.size() != 1) throw Error("mlp needs a flat [D] input shape");
      std::int64_t in = cfg.input_shape[0];
      for (int l = 0; l < cfg.depth; ++l) {
        b.linear(in, w);
        b.act(w);
        in = w;
      }
      b.linear(in, cfg.classes);
      break;
    }
    case SynthArch::Conv: {
      need_image(cfg);
      std::int64_t c = cfg.input_shape[0], h = cfg.input_shape[1], wd = cfg.input_shape[2];
      for (int l = 0; l < cfg.depth; ++l) {
        b.conv(c, w);
        b.act(w);
        c = w;
        if (l % 2 == 1 && h % 2 == 0 && wd % 2 == 0) {
          b.add("pool", AvgPool2d{2});
          h /= 2;
          wd /= 2;
        }
      }
      if (h % 2 == 0 && wd % 2 == 0 && cfg.depth % 2 == 1) {
        b.add("pool", AvgPool2d{2});
        h /= 2;
        wd /= 2;
      }
      b.add("flatten", Flatten{});
      b.linear(c * h * wd, cfg.classes);
      break;
    }
    case SynthArch::VGG: {
      need_image(cfg);
      // Stages of two convs, doubling channels and halving resolution.
      std::int64_t c = cfg.input_shape[0], h = cfg.input_shape[1], wd = cfg.input_shape[2];
      std::int64_t out = w;
      for (int l = 0; l < cfg.depth; ++l) {
        b.conv(c, out);
        b.act(out);
        c = out;
        if (l % 2 == 1) {
          if (h % 2 == 0 && wd % 2 == 0) {
            b.add("pool", AvgPool2d{2});
            h /= 2;
            wd /= 2;
          }
          out *= 2;
        }
      }
      b.add("flatten", Flatten{});
      const std::int64_t hidden = 2 * w;
      b.linear(c * h * wd, hidden);
      b.act(hidden);
      b.linear(hidden, cfg.classes);
      break;
    }
    case SynthArch::ResNet: {
      need_image(cfg);
      std::int64_t h = cfg.input_shape[1], wd = cfg.input_shape[2];
      b.conv(cfg.input_shape[0], w);
      b.act(w);
      for (int l = 0; l < cfg.depth; ++l) {
        b.add("res", ResidualBegin{l});
        b.conv(w, w);
        b.act(w);
        b.conv(w, w);
        b.add("join", ResidualJoin{l});
        b.act(w);
      }
      if (h % 2 == 0 && wd % 2 == 0) {
        b.add("pool", AvgPool2d{2});
        h /= 2;
        wd /= 2;
      }
      b.add("flatten", Flatten{});
      b.linear(w * h * wd, cfg.classes);
      break;
    }
  }
  return b.finish();
}

}  // namespace pcsnn
