#pragma once

// Minimal reverse-mode computation graph over dense tensors.
//
// Nodes are appended in topological order (inputs must already exist), so a
// single reverse sweep propagates gradients.  Projection operators register
// each other as their gradient: the gradient of a forward projection is the
// matching back projection of the upstream gradient and vice versa.  The
// pair is not an exact transpose — see projector.hpp — which trades exact
// adjointness for reconstruction quality on both sides.
//
// Tensor shapes list the fastest axis first, matching Image / Sinogram.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tomograd/core.hpp"
#include "tomograd/fft.hpp"
#include "tomograd/filtering.hpp"
#include "tomograd/geometry.hpp"
#include "tomograd/image.hpp"
#include "tomograd/projector.hpp"

namespace tomograd {

enum class OpKind {
  input,
  parameter,
  forward_project,
  backproject,
  multiply_weights,
  fourier_filter,
  add,
  scale,
  l2_loss,
  tv_loss,
};

using NodeId = int;

namespace detail {

using GeometryVariant =
    std::variant<std::monostate, ParallelGeometry, FanGeometry, ConeGeometry>;

template <typename T>
Image<T> image_from(const Tensor<T>& t, const VolumeSpec& vol) {
  check(t.shape == vol.shape, "tensor shape does not match the volume spec");
  Image<T> img(vol);
  img.data = t.data;
  return img;
}

template <typename Geo, typename T>
Sinogram<T> sino_from(const Tensor<T>& t, const Geo& geo) {
  Sinogram<T> s;
  if constexpr (std::is_same_v<Geo, ConeGeometry>)
    s = Sinogram<T>::cone_beam(geo.n_projections, geo.detector);
  else
    s = Sinogram<T>::planar(geo.n_projections, geo.detector);
  check(t.shape == s.shape(), "tensor shape does not match the geometry");
  s.data = t.data;
  return s;
}

inline std::vector<std::size_t> sino_shape(const GeometryVariant& g) {
  if (auto* p = std::get_if<ParallelGeometry>(&g))
    return {p->detector.n_bins, p->n_projections};
  if (auto* f = std::get_if<FanGeometry>(&g))
    return {f->detector.n_bins, f->n_projections};
  const auto& c = std::get<ConeGeometry>(g);
  return {c.detector.n_u, c.detector.n_v, c.n_projections};
}

inline std::vector<std::size_t> volume_shape(const GeometryVariant& g) {
  if (auto* p = std::get_if<ParallelGeometry>(&g)) return p->volume.shape;
  if (auto* f = std::get_if<FanGeometry>(&g)) return f->volume.shape;
  return std::get<ConeGeometry>(g).volume.shape;
}

}  // namespace detail

struct Node {
  OpKind kind;
  std::vector<NodeId> inputs;
  std::vector<std::size_t> shape;  // expected value shape (empty = scalar)
  bool trainable = false;
  double factor = 1.0;             // scale nodes
  std::size_t padded_n = 0;        // fourier_filter window
  detail::GeometryVariant geometry;

  Tensor<> value;
  Tensor<> grad;
  bool has_value = false;
};

class Graph {
 public:
  NodeId input(std::vector<std::size_t> shape) {
    Node n{OpKind::input, {}, std::move(shape)};
    return push(std::move(n));
  }

  NodeId parameter(Tensor<> init, bool trainable = true) {
    Node n{OpKind::parameter, {}, init.shape};
    n.trainable = trainable;
    n.value = std::move(init);
    n.has_value = true;
    return push(std::move(n));
  }

  template <typename Geo>
  NodeId forward_project(NodeId x, Geo geo) {
    detail::GeometryVariant g = std::move(geo);
    Node n{OpKind::forward_project, {valid(x)}, detail::sino_shape(g)};
    check(node(x).shape == detail::volume_shape(g),
          "forward_project input shape does not match the geometry volume");
    n.geometry = std::move(g);
    return push(std::move(n));
  }

  template <typename Geo>
  NodeId backproject(NodeId x, Geo geo) {
    detail::GeometryVariant g = std::move(geo);
    Node n{OpKind::backproject, {valid(x)}, detail::volume_shape(g)};
    check(node(x).shape == detail::sino_shape(g),
          "backproject input shape does not match the geometry sinogram");
    n.geometry = std::move(g);
    return push(std::move(n));
  }

  // w broadcasts over trailing axes when its shape is a prefix of x's
  NodeId multiply_weights(NodeId x, NodeId w) {
    const auto& xs = node(valid(x)).shape;
    const auto& ws = node(valid(w)).shape;
    const bool full = ws == xs;
    const bool prefix =
        ws.size() < xs.size() &&
        std::equal(ws.begin(), ws.end(), xs.begin());
    check(full || prefix,
          "weight shape must equal the input shape or a prefix of it");
    Node n{OpKind::multiply_weights, {x, w}, xs};
    return push(std::move(n));
  }

  // real frequency weights k (length padded_n) applied row-wise in the DFT
  // domain; rows are the fastest axis of x
  NodeId fourier_filter(NodeId x, NodeId k, std::size_t padded_n) {
    const auto& xs = node(valid(x)).shape;
    const auto& ks = node(valid(k)).shape;
    check(!xs.empty(), "fourier_filter input must have at least one axis");
    check(is_pow2(padded_n), "filter window must be a power of two");
    check(padded_n >= xs[0], "filter window is smaller than the detector row");
    check(ks.size() == 1 && ks[0] == padded_n,
          "filter weight vector must have length padded_n");
    Node n{OpKind::fourier_filter, {x, k}, xs};
    n.padded_n = padded_n;
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) {
    check(node(valid(a)).shape == node(valid(b)).shape,
          "add expects matching shapes");
    Node n{OpKind::add, {a, b}, node(a).shape};
    return push(std::move(n));
  }

  NodeId scale(NodeId x, double factor) {
    Node n{OpKind::scale, {valid(x)}, node(x).shape};
    n.factor = factor;
    return push(std::move(n));
  }

  NodeId l2_loss(NodeId a, NodeId b) {
    check(node(valid(a)).shape == node(valid(b)).shape,
          "l2_loss expects matching shapes");
    Node n{OpKind::l2_loss, {a, b}, {}};
    return push(std::move(n));
  }

  NodeId tv_loss(NodeId x) {
    check(!node(valid(x)).shape.empty(), "tv_loss needs a non-scalar input");
    Node n{OpKind::tv_loss, {x}, {}};
    return push(std::move(n));
  }

  // --- execution ------------------------------------------------------------

  void forward(const std::map<NodeId, Tensor<>>& feeds) {
    for (const auto& [id, t] : feeds) {
      check(id >= 0 && id < NodeId(nodes_.size()) &&
                nodes_[id].kind == OpKind::input,
            "feed id does not name an input node");
      check(t.shape == nodes_[id].shape, "feed shape mismatch");
    }
    for (NodeId id = 0; id < NodeId(nodes_.size()); ++id) {
      Node& n = nodes_[id];
      switch (n.kind) {
        case OpKind::input: {
          auto it = feeds.find(id);
          check(it != feeds.end(), "missing feed for input node");
          n.value = it->second;
          break;
        }
        case OpKind::parameter:
          break;  // holds its own value
        default:
          n.value = evaluate(n);
      }
      n.has_value = true;
    }
  }

  // Reverse sweep from a scalar loss; returns gradients of all parameters.
  std::map<NodeId, Tensor<>> backward(NodeId loss) {
    valid(loss);
    check(nodes_[loss].has_value, "run forward before backward");
    check(nodes_[loss].value.is_scalar(), "loss node must be scalar");
    for (auto& n : nodes_)
      n.grad = Tensor<>(n.value.shape, std::vector<double>(n.value.size(), 0.0));
    nodes_[loss].grad = Tensor<>::scalar(1.0);

    // restrict the sweep to ancestors of the loss
    std::vector<char> active(nodes_.size(), 0);
    std::vector<NodeId> stack{loss};
    active[loss] = 1;
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      for (NodeId in : nodes_[id].inputs)
        if (!active[in]) {
          active[in] = 1;
          stack.push_back(in);
        }
    }
    for (NodeId id = loss; id >= 0; --id)
      if (active[id]) propagate(id);

    std::map<NodeId, Tensor<>> grads;
    for (NodeId id = 0; id < NodeId(nodes_.size()); ++id)
      if (nodes_[id].kind == OpKind::parameter) grads[id] = nodes_[id].grad;
    return grads;
  }

  const Tensor<>& value(NodeId id) const {
    check(nodes_[valid(id)].has_value, "node has no value; run forward first");
    return nodes_[id].value;
  }
  const Tensor<>& grad(NodeId id) const { return nodes_[valid(id)].grad; }
  Node& node(NodeId id) { return nodes_[valid(id)]; }
  const Node& node(NodeId id) const { return nodes_[valid(id)]; }
  std::size_t size() const { return nodes_.size(); }

  std::vector<NodeId> trainable_parameters() const {
    std::vector<NodeId> ids;
    for (NodeId id = 0; id < NodeId(nodes_.size()); ++id)
      if (nodes_[id].kind == OpKind::parameter && nodes_[id].trainable)
        ids.push_back(id);
    return ids;
  }

 private:
  std::vector<Node> nodes_;

  NodeId valid(NodeId id) const {
    check(id >= 0 && id < NodeId(nodes_.size()), "node id out of range");
    return id;
  }

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return NodeId(nodes_.size()) - 1;
  }

  const Tensor<>& in_value(const Node& n, std::size_t i) const {
    const Node& src = nodes_[n.inputs[i]];
    check(src.has_value, "node evaluated before its input");
    return src.value;
  }

  Tensor<> evaluate(const Node& n) {
    switch (n.kind) {
      case OpKind::forward_project: {
        const Tensor<>& x = in_value(n, 0);
        return std::visit(
            [&](const auto& geo) -> Tensor<> {
              using G = std::decay_t<decltype(geo)>;
              if constexpr (std::is_same_v<G, std::monostate>)
                throw Error("projection node lost its geometry");
              else
                return tomograd::forward_project(
                           detail::image_from(x, geo.volume), geo)
                    .tensor();
            },
            n.geometry);
      }
      case OpKind::backproject: {
        const Tensor<>& x = in_value(n, 0);
        return std::visit(
            [&](const auto& geo) -> Tensor<> {
              using G = std::decay_t<decltype(geo)>;
              if constexpr (std::is_same_v<G, std::monostate>)
                throw Error("projection node lost its geometry");
              else
                return tomograd::back_project(detail::sino_from(x, geo), geo)
                    .tensor();
            },
            n.geometry);
      }
      case OpKind::multiply_weights: {
        const Tensor<>& x = in_value(n, 0);
        const Tensor<>& w = in_value(n, 1);
        Tensor<> out = x;
        const std::size_t block = w.data.size();
        for (std::size_t i = 0; i < out.data.size(); ++i)
          out.data[i] *= w.data[i % block];
        return out;
      }
      case OpKind::fourier_filter: {
        const Tensor<>& x = in_value(n, 0);
        const Tensor<>& k = in_value(n, 1);
        return filter_tensor(x, k.data, n.padded_n);
      }
      case OpKind::add: {
        Tensor<> out = in_value(n, 0);
        const Tensor<>& b = in_value(n, 1);
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
        return out;
      }
      case OpKind::scale: {
        Tensor<> out = in_value(n, 0);
        for (auto& v : out.data) v *= n.factor;
        return out;
      }
      case OpKind::l2_loss: {
        const Tensor<>& a = in_value(n, 0);
        const Tensor<>& b = in_value(n, 1);
        double s = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i) {
          const double d = a.data[i] - b.data[i];
          s += d * d;
        }
        return Tensor<>::scalar(s);
      }
      case OpKind::tv_loss: {
        const Tensor<>& x = in_value(n, 0);
        return Tensor<>::scalar(tv_value(x));
      }
      default:
        throw Error("node kind cannot be evaluated");
    }
  }

  static double tv_value(const Tensor<>& x) {
    double s = 0.0;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < x.shape.size(); ++a) {
      const std::size_t n_a = x.shape[a];
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        const std::size_t ia = (i / stride) % n_a;
        if (ia + 1 < n_a) s += std::abs(x.data[i + stride] - x.data[i]);
      }
      stride *= n_a;
    }
    return s;
  }

  static Tensor<> filter_tensor(const Tensor<>& x, const std::vector<double>& k,
                                std::size_t padded_n) {
    const std::size_t n = x.shape[0];
    Tensor<> out = x;
    std::vector<std::complex<double>> buf(padded_n);
    for (std::size_t r = 0; r < x.data.size() / n; ++r) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = x.data[r * n + j];
      for (std::size_t j = n; j < padded_n; ++j) buf[j] = 0.0;
      fft_1d(buf, FftDirection::forward);
      for (std::size_t i = 0; i < padded_n; ++i) buf[i] *= k[i];
      fft_1d(buf, FftDirection::inverse);
      for (std::size_t j = 0; j < n; ++j) out.data[r * n + j] = buf[j].real();
    }
    return out;
  }

  void check_grad_finite(NodeId id) const {
    for (double v : nodes_[id].grad.data)
      if (std::isnan(v))
        throw Error("gradient of node " + std::to_string(id) + " contains NaN");
  }

  void add_to_grad(NodeId id, const std::vector<double>& contrib) {
    auto& g = nodes_[id].grad.data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += contrib[i];
  }

  void propagate(NodeId id) {
    Node& n = nodes_[id];
    check_grad_finite(id);
    const auto& g = n.grad.data;
    switch (n.kind) {
      case OpKind::input:
      case OpKind::parameter:
        return;
      case OpKind::forward_project: {
        Tensor<> gt(n.value.shape, g);
        std::visit(
            [&](const auto& geo) {
              using G = std::decay_t<decltype(geo)>;
              if constexpr (!std::is_same_v<G, std::monostate>) {
                auto bp = tomograd::back_project(detail::sino_from(gt, geo), geo);
                add_to_grad(n.inputs[0], bp.data);
              }
            },
            n.geometry);
        return;
      }
      case OpKind::backproject: {
        Tensor<> gt(n.value.shape, g);
        std::visit(
            [&](const auto& geo) {
              using G = std::decay_t<decltype(geo)>;
              if constexpr (!std::is_same_v<G, std::monostate>) {
                auto fp = tomograd::forward_project(
                    detail::image_from(gt, geo.volume), geo);
                add_to_grad(n.inputs[0], fp.data);
              }
            },
            n.geometry);
        return;
      }
      case OpKind::multiply_weights: {
        const auto& x = nodes_[n.inputs[0]].value.data;
        const auto& w = nodes_[n.inputs[1]].value.data;
        auto& gx = nodes_[n.inputs[0]].grad.data;
        auto& gw = nodes_[n.inputs[1]].grad.data;
        const std::size_t block = w.size();
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] * w[i % block];
          gw[i % block] += g[i] * x[i];  // sums over broadcast axes
        }
        return;
      }
      case OpKind::fourier_filter: {
        const Tensor<>& x = nodes_[n.inputs[0]].value;
        const auto& k = nodes_[n.inputs[1]].value.data;
        // the real filter matrix is symmetric, so the input gradient is the
        // same filter applied to the upstream gradient
        Tensor<> gt(n.value.shape, g);
        Tensor<> gx = filter_tensor(gt, k, n.padded_n);
        add_to_grad(n.inputs[0], gx.data);
        // d loss / d k_f = sum over rows Re(X_f * conj(G_f)) / padded_n
        auto& gk = nodes_[n.inputs[1]].grad.data;
        const std::size_t nb = x.shape[0];
        const double inv_n = 1.0 / double(n.padded_n);
        std::vector<std::complex<double>> xf(n.padded_n), gf(n.padded_n);
        for (std::size_t r = 0; r < x.data.size() / nb; ++r) {
          for (std::size_t j = 0; j < nb; ++j) {
            xf[j] = x.data[r * nb + j];
            gf[j] = g[r * nb + j];
          }
          for (std::size_t j = nb; j < n.padded_n; ++j) xf[j] = gf[j] = 0.0;
          fft_1d(xf, FftDirection::forward);
          fft_1d(gf, FftDirection::forward);
          for (std::size_t f = 0; f < n.padded_n; ++f)
            gk[f] += inv_n * (xf[f].real() * gf[f].real() +
                              xf[f].imag() * gf[f].imag());
        }
        return;
      }
      case OpKind::add:
        add_to_grad(n.inputs[0], g);
        add_to_grad(n.inputs[1], g);
        return;
      case OpKind::scale: {
        std::vector<double> gx(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] = n.factor * g[i];
        add_to_grad(n.inputs[0], gx);
        return;
      }
      case OpKind::l2_loss: {
        const double gs = n.grad.scalar_value();
        const auto& a = nodes_[n.inputs[0]].value.data;
        const auto& b = nodes_[n.inputs[1]].value.data;
        auto& ga = nodes_[n.inputs[0]].grad.data;
        auto& gb = nodes_[n.inputs[1]].grad.data;
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double d = 2.0 * gs * (a[i] - b[i]);
          ga[i] += d;
          gb[i] -= d;
        }
        return;
      }
      case OpKind::tv_loss: {
        const double gs = n.grad.scalar_value();
        const Tensor<>& x = nodes_[n.inputs[0]].value;
        auto& gx = nodes_[n.inputs[0]].grad.data;
        std::size_t stride = 1;
        for (std::size_t a = 0; a < x.shape.size(); ++a) {
          const std::size_t n_a = x.shape[a];
          for (std::size_t i = 0; i < x.data.size(); ++i) {
            const std::size_t ia = (i / stride) % n_a;
            if (ia + 1 >= n_a) continue;
            const double d = x.data[i + stride] - x.data[i];
            // subgradient: flat regions contribute nothing
            const double s = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            gx[i + stride] += gs * s;
            gx[i] -= gs * s;
          }
          stride *= n_a;
        }
        return;
      }
    }
  }
};

// One plain gradient-descent update; gradients of non-trainable parameters
// are never applied.
inline void gradient_descent_step(Graph& g,
                                  const std::map<NodeId, Tensor<>>& grads,
                                  double learning_rate) {
  for (NodeId id : g.trainable_parameters()) {
    auto it = grads.find(id);
    if (it == grads.end()) continue;
    auto& value = g.node(id).value.data;
    const auto& grad = it->second.data;
    check(grad.size() == value.size(), "gradient shape mismatch");
    for (std::size_t i = 0; i < value.size(); ++i)
      value[i] -= learning_rate * grad[i];
  }
}

}  // namespace tomograd
