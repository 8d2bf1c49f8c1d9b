#include "efenet/autograd.hpp"

#include <stdexcept>

namespace efenet::ag {
namespace {

Graph& graph_of(std::span<const Var> vars) {
  Graph* g = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw std::invalid_argument("autograd: invalid operand");
    if (g && v.graph() != g) throw std::invalid_argument("autograd: operands from different graphs");
    g = v.graph();
  }
  if (!g) throw std::invalid_argument("autograd: op without operands");
  return *g;
}

void accumulate(Tensor& dst, const Tensor& src) {
  float* d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }
double Var::scalar() const { return graph_->scalar(id_); }

Var Graph::add_node(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::constant(Tensor t) { return add_node(Node{std::move(t), {}, 0.0, false, nullptr}); }

Var Graph::input(Tensor t) { return add_node(Node{std::move(t), {}, 0.0, true, nullptr}); }

Var Graph::param(Parameter& p) {
  Parameter* target = &p;
  return add_node(Node{p.value, {}, 0.0, true, [target](Graph& g, int self) {
                         if (target->grad.shape() != target->value.shape()) target->zero_grad();
                         accumulate(target->grad, g.grad(self));
                       }});
}

Var Graph::make(Tensor value, std::span<const Var> parents, BackwardFn backward, double scalar) {
  bool req = false;
  for (const Var& p : parents) req = req || requires_grad(p.id());
  return add_node(Node{std::move(value), {}, scalar, req, req ? std::move(backward) : nullptr});
}

Tensor& Graph::grad_mut(int id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(Var out) {
  if (out.shape().size() != 1) throw std::invalid_argument("backward: output is not a scalar");
  backward(out, Tensor(1, 1, 1, 1.0f));
}

void Graph::backward(Var out, const Tensor& seed) {
  if (out.graph() != this) throw std::invalid_argument("backward: foreign variable");
  if (seed.shape() != out.shape()) throw std::invalid_argument("backward: seed shape mismatch");
  accumulate(grad_mut(out.id()), seed);
  for (int id = out.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, id);
  }
}

// ---------------------------------------------------------------------------

Var conv2d(Var x, Var weight, Var bias, const kernels::ConvGeom& geom) {
  const Var parents[] = {x, weight, bias};
  Graph& g = graph_of(parents);
  Tensor y;
  kernels::conv2d_forward(x.value(), weight.value().span(), bias.value().span(), geom, y);
  return g.make(std::move(y), parents, [x, weight, bias, geom](Graph& gr, int self) {
    Tensor* dx = gr.requires_grad(x.id()) ? &gr.grad_mut(x.id()) : nullptr;
    std::span<float> dw, db;
    if (gr.requires_grad(weight.id())) dw = gr.grad_mut(weight.id()).span();
    if (gr.requires_grad(bias.id())) db = gr.grad_mut(bias.id()).span();
    kernels::conv2d_backward(x.value(), weight.value().span(), gr.grad(self), geom, dx, dw, db);
  });
}

Var conv_transpose2d(Var x, Var weight, Var bias, const kernels::ConvGeom& geom) {
  const Var parents[] = {x, weight, bias};
  Graph& g = graph_of(parents);
  Tensor y;
  kernels::conv_transpose2d_forward(x.value(), weight.value().span(), bias.value().span(), geom, y);
  return g.make(std::move(y), parents, [x, weight, bias, geom](Graph& gr, int self) {
    Tensor* dx = gr.requires_grad(x.id()) ? &gr.grad_mut(x.id()) : nullptr;
    std::span<float> dw, db;
    if (gr.requires_grad(weight.id())) dw = gr.grad_mut(weight.id()).span();
    if (gr.requires_grad(bias.id())) db = gr.grad_mut(bias.id()).span();
    kernels::conv_transpose2d_backward(x.value(), weight.value().span(), gr.grad(self), geom, dx, dw,
                                       db);
  });
}

Var leaky_relu(Var x, float slope) {
  const Var parents[] = {x};
  Graph& g = graph_of(parents);
  Tensor y = x.value();
  for (float& v : y.span()) v = v > 0.0f ? v : v * slope;
  return g.make(std::move(y), parents, [x, slope](Graph& gr, int self) {
    Tensor& dx = gr.grad_mut(x.id());
    const Tensor& in = x.value();
    const Tensor& dy = gr.grad(self);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += in[i] > 0.0f ? dy[i] : dy[i] * slope;
  });
}

Var concat(std::span<const Var> parts) {
  Graph& g = graph_of(parts);
  std::vector<const Tensor*> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(&p.value());
  Tensor y = concat_channels<float>(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.make(std::move(y), parts, [inputs](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const float* src = dy.data();
    for (const Var& p : inputs) {
      const std::size_t n = p.value().size();
      if (gr.requires_grad(p.id())) {
        float* dst = gr.grad_mut(p.id()).data();
        for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
      }
      src += n;
    }
  });
}

Var add(Var a, Var b) {
  const Var parents[] = {a, b};
  Graph& g = graph_of(parents);
  if (a.shape() != b.shape()) throw std::invalid_argument("add: shape mismatch");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return g.make(std::move(y), parents, [a, b](Graph& gr, int self) {
    for (const Var& v : {a, b})
      if (gr.requires_grad(v.id())) accumulate(gr.grad_mut(v.id()), gr.grad(self));
  });
}

Var scale(Var a, float s) {
  const Var parents[] = {a};
  Graph& g = graph_of(parents);
  Tensor y = a.value();
  for (float& v : y.span()) v *= s;
  return g.make(std::move(y), parents, [a, s](Graph& gr, int self) {
    Tensor& da = gr.grad_mut(a.id());
    const Tensor& dy = gr.grad(self);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += s * dy[i];
  });
}

Var warp(Var source, Var flow) {
  const Var parents[] = {source, flow};
  Graph& g = graph_of(parents);
  Tensor y;
  kernels::warp_forward(source.value(), flow.value(), y);
  return g.make(std::move(y), parents, [source, flow](Graph& gr, int self) {
    Tensor* ds = gr.requires_grad(source.id()) ? &gr.grad_mut(source.id()) : nullptr;
    Tensor* df = gr.requires_grad(flow.id()) ? &gr.grad_mut(flow.id()) : nullptr;
    kernels::warp_backward(source.value(), flow.value(), gr.grad(self), ds, df);
  });
}

Var avg_pool2(Var x) {
  const Var parents[] = {x};
  Graph& g = graph_of(parents);
  const Tensor& in = x.value();
  if (in.height() % 2 || in.width() % 2) throw std::invalid_argument("avg_pool2: odd extent");
  Tensor y(in.channels(), in.height() / 2, in.width() / 2);
  for (int c = 0; c < y.channels(); ++c)
    for (int yy = 0; yy < y.height(); ++yy)
      for (int xx = 0; xx < y.width(); ++xx)
        y(c, yy, xx) = 0.25f * (in(c, 2 * yy, 2 * xx) + in(c, 2 * yy, 2 * xx + 1) +
                                in(c, 2 * yy + 1, 2 * xx) + in(c, 2 * yy + 1, 2 * xx + 1));
  return g.make(std::move(y), parents, [x](Graph& gr, int self) {
    Tensor& dx = gr.grad_mut(x.id());
    const Tensor& dy = gr.grad(self);
    for (int c = 0; c < dy.channels(); ++c)
      for (int yy = 0; yy < dy.height(); ++yy)
        for (int xx = 0; xx < dy.width(); ++xx) {
          const float v = 0.25f * dy(c, yy, xx);
          dx(c, 2 * yy, 2 * xx) += v;
          dx(c, 2 * yy, 2 * xx + 1) += v;
          dx(c, 2 * yy + 1, 2 * xx) += v;
          dx(c, 2 * yy + 1, 2 * xx + 1) += v;
        }
  });
}

Var crop(Var x, int h, int w) {
  const Var parents[] = {x};
  Graph& g = graph_of(parents);
  const Tensor& in = x.value();
  if (h > in.height() || w > in.width()) throw std::invalid_argument("crop: target larger than source");
  if (h == in.height() && w == in.width()) return x;
  Tensor y(in.channels(), h, w);
  for (int c = 0; c < in.channels(); ++c)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) y(c, yy, xx) = in(c, yy, xx);
  return g.make(std::move(y), parents, [x](Graph& gr, int self) {
    Tensor& dx = gr.grad_mut(x.id());
    const Tensor& dy = gr.grad(self);
    for (int c = 0; c < dy.channels(); ++c)
      for (int yy = 0; yy < dy.height(); ++yy)
        for (int xx = 0; xx < dy.width(); ++xx) dx(c, yy, xx) += dy(c, yy, xx);
  });
}

Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
  Graph& g = graph_of(terms);
  double total = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].shape().size() != 1) throw std::invalid_argument("weighted_sum: non-scalar term");
    total += weights[i] * terms[i].scalar();
  }
  std::vector<Var> ts(terms.begin(), terms.end());
  std::vector<double> ws(weights.begin(), weights.end());
  return g.make(
      Tensor(1, 1, 1, static_cast<float>(total)), terms,
      [ts, ws](Graph& gr, int self) {
        const float seed = gr.grad(self)[0];
        for (std::size_t i = 0; i < ts.size(); ++i)
          if (gr.requires_grad(ts[i].id()) && ws[i] != 0.0)
            gr.grad_mut(ts[i].id())[0] += static_cast<float>(ws[i]) * seed;
      },
      total);
}

}  // namespace efenet::ag
