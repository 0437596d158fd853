#include <Eigen/Core>
#include <cmath>

#include "pmcast/autodiff.hpp"
#include "pmcast/errors.hpp"

namespace pmcast::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void check_same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Splits a shape around `axis` into (outer, axis extent, inner) counts.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var conv1d_causal(Var input, Var kernel, std::size_t dilation) {
  check_same_graph(input, kernel);
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  if (dilation == 0) throw ParameterError("conv1d_causal: dilation must be >= 1");
  if (w.rank() != 3) throw ShapeError("conv1d_causal: kernel must be [C_out, C_in, k], got " + shape_string(w.shape()));
  if (x.rank() != 2 && x.rank() != 3) {
    throw ShapeError("conv1d_causal: input must be [C_in, L] or [B, C_in, L], got " + shape_string(x.shape()));
  }
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t c_in = x.dim(x.rank() - 2);
  const std::size_t len = x.dim(x.rank() - 1);
  const std::size_t c_out = w.dim(0);
  const std::size_t k = w.dim(2);
  if (w.dim(1) != c_in) {
    throw ShapeError("conv1d_causal: kernel expects " + std::to_string(w.dim(1)) +
                     " input channels, input has " + std::to_string(c_in));
  }

  Shape out_shape = batched ? Shape{batch, c_out, len} : Shape{c_out, len};
  Tensor out(out_shape);
  const double* xv = x.data();
  const double* wv = w.data();
  double* ov = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      double* orow = ov + (b * c_out + co) * len;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double* xrow = xv + (b * c_in + ci) * len;
        const double* wk = wv + (co * c_in + ci) * k;
        for (std::size_t l = 0; l < k; ++l) {
          const std::size_t shift = dilation * l;
          if (shift >= len) break;
          const double coef = wk[l];
          for (std::size_t t = shift; t < len; ++t) orow[t] += coef * xrow[t - shift];
        }
      }
    }
  }

  const auto xi = input.id();
  const auto wi = kernel.id();
  return input.graph().record(
      OpKind::Conv1dCausal, {xi, wi}, std::move(out),
      [=](Graph& g, std::size_t self) {
        const auto dout = g.out_grad(self);
        const double* xv = g.value(xi).data();
        const double* wv = g.value(wi).data();
        if (g.requires_grad(xi)) {
          double* dx = g.grad_buffer(xi).data();
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t co = 0; co < c_out; ++co) {
              const double* drow = dout.data() + (b * c_out + co) * len;
              for (std::size_t ci = 0; ci < c_in; ++ci) {
                double* dxrow = dx + (b * c_in + ci) * len;
                const double* wk = wv + (co * c_in + ci) * k;
                for (std::size_t l = 0; l < k; ++l) {
                  const std::size_t shift = dilation * l;
                  if (shift >= len) break;
                  const double coef = wk[l];
                  for (std::size_t t = shift; t < len; ++t) dxrow[t - shift] += coef * drow[t];
                }
              }
            }
          }
        }
        if (g.requires_grad(wi)) {
          double* dw = g.grad_buffer(wi).data();
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t co = 0; co < c_out; ++co) {
              const double* drow = dout.data() + (b * c_out + co) * len;
              for (std::size_t ci = 0; ci < c_in; ++ci) {
                const double* xrow = xv + (b * c_in + ci) * len;
                double* dwk = dw + (co * c_in + ci) * k;
                for (std::size_t l = 0; l < k; ++l) {
                  const std::size_t shift = dilation * l;
                  if (shift >= len) break;
                  double acc = 0.0;
                  for (std::size_t t = shift; t < len; ++t) acc += drow[t] * xrow[t - shift];
                  dwk[l] += acc;
                }
              }
            }
          }
        }
      });
}

Var weight_norm(Var direction, Var gain) {
  check_same_graph(direction, gain);
  const Tensor& v = direction.value();
  const Tensor& gv = gain.value();
  const std::size_t units = v.dim(0);
  if (gv.size() != units) {
    throw ShapeError("weight_norm: gain has " + std::to_string(gv.size()) + " entries for " +
                     std::to_string(units) + " output units");
  }
  const std::size_t per_unit = v.size() / units;
  std::vector<double> norms(units);
  Tensor out(v.shape());
  for (std::size_t u = 0; u < units; ++u) {
    const double* row = v.data() + u * per_unit;
    double ss = 0.0;
    for (std::size_t j = 0; j < per_unit; ++j) ss += row[j] * row[j];
    const double norm = std::sqrt(ss);
    if (!(norm > 0.0)) {
      throw DegenerateWeightError("weight_norm: direction of output unit " + std::to_string(u) +
                                  " has zero norm");
    }
    norms[u] = norm;
    const double s = gv[u] / norm;
    for (std::size_t j = 0; j < per_unit; ++j) out[u * per_unit + j] = s * row[j];
  }

  const auto vi = direction.id();
  const auto gi = gain.id();
  return direction.graph().record(
      OpKind::WeightNorm, {vi, gi}, std::move(out),
      [=, norms = std::move(norms)](Graph& g, std::size_t self) {
        const auto dw = g.out_grad(self);
        const Tensor& v = g.value(vi);
        const Tensor& gv = g.value(gi);
        const bool need_v = g.requires_grad(vi);
        const bool need_g = g.requires_grad(gi);
        double* dv = need_v ? g.grad_buffer(vi).data() : nullptr;
        double* dg = need_g ? g.grad_buffer(gi).data() : nullptr;
        for (std::size_t u = 0; u < units; ++u) {
          const double* row = v.data() + u * per_unit;
          const double* drow = dw.data() + u * per_unit;
          double dot = 0.0;
          for (std::size_t j = 0; j < per_unit; ++j) dot += drow[j] * row[j];
          const double n = norms[u];
          if (dg) dg[u] += dot / n;
          if (dv) {
            const double a = gv[u] / n;
            const double c = gv[u] * dot / (n * n * n);
            for (std::size_t j = 0; j < per_unit; ++j) dv[u * per_unit + j] += a * drow[j] - c * row[j];
          }
        }
      });
}

Var activation(Var x, Activation kind) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  const std::size_t n = in.size();
  switch (kind) {
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) {
        const double z = in[i];
        if (z >= 0.0) {
          out[i] = 1.0 / (1.0 + std::exp(-z));
        } else {
          const double e = std::exp(z);
          out[i] = e / (1.0 + e);
        }
      }
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
      break;
    case Activation::Identity:
      out = in;
      break;
  }
  const auto xi = x.id();
  return x.graph().record(OpKind::Activation, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    const Tensor& in = g.value(xi);
    const Tensor& y = g.value(self);
    switch (kind) {
      case Activation::Relu:
        for (std::size_t i = 0; i < n; ++i) {
          if (in[i] > 0.0) dx[i] += dout[i];
        }
        break;
      case Activation::Sigmoid:
        for (std::size_t i = 0; i < n; ++i) dx[i] += dout[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::Tanh:
        for (std::size_t i = 0; i < n; ++i) dx[i] += dout[i] * (1.0 - y[i] * y[i]);
        break;
      case Activation::Identity:
        for (std::size_t i = 0; i < n; ++i) dx[i] += dout[i];
        break;
    }
  });
}

Var relu(Var x) { return activation(x, Activation::Relu); }
Var sigmoid(Var x) { return activation(x, Activation::Sigmoid); }
Var tanh(Var x) { return activation(x, Activation::Tanh); }

namespace {

Var affine_impl(Var x, Var weight, Var bias, bool has_bias) {
  check_same_graph(x, weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (wv.rank() != 2) throw ShapeError("affine: weight must be [out, in], got " + shape_string(wv.shape()));
  if (xv.rank() != 1 && xv.rank() != 2) {
    throw ShapeError("affine: input must be [in] or [B, in], got " + shape_string(xv.shape()));
  }
  const bool batched = xv.rank() == 2;
  const std::size_t rows = batched ? xv.dim(0) : 1;
  const std::size_t in = xv.dim(xv.rank() - 1);
  const std::size_t out_dim = wv.dim(0);
  if (wv.dim(1) != in) {
    throw ShapeError("affine: weight " + shape_string(wv.shape()) + " does not accept input " +
                     shape_string(xv.shape()));
  }
  if (has_bias) {
    check_same_graph(x, bias);
    if (bias.value().size() != out_dim || bias.value().rank() != 1) {
      throw ShapeError("affine: bias must be [" + std::to_string(out_dim) + "], got " +
                       shape_string(bias.value().shape()));
    }
  }

  Tensor out(batched ? Shape{rows, out_dim} : Shape{out_dim});
  ConstMap X(xv.data(), rows, in);
  ConstMap W(wv.data(), out_dim, in);
  MutMap Y(out.data(), rows, out_dim);
  Y.noalias() = X * W.transpose();
  if (has_bias) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias.value().data(), out_dim);
    Y.rowwise() += b;
  }

  const auto xi = x.id();
  const auto wi = weight.id();
  const auto bi = has_bias ? bias.id() : 0;
  std::vector<std::size_t> inputs{xi, wi};
  if (has_bias) inputs.push_back(bi);
  return x.graph().record(
      has_bias ? OpKind::Affine : OpKind::Linear, std::move(inputs), std::move(out),
      [=](Graph& g, std::size_t self) {
        ConstMap dY(g.out_grad(self).data(), rows, out_dim);
        if (g.requires_grad(xi)) {
          MutMap dX(g.grad_buffer(xi).data(), rows, in);
          dX.noalias() += dY * ConstMap(g.value(wi).data(), out_dim, in);
        }
        if (g.requires_grad(wi)) {
          MutMap dW(g.grad_buffer(wi).data(), out_dim, in);
          dW.noalias() += dY.transpose() * ConstMap(g.value(xi).data(), rows, in);
        }
        if (has_bias && g.requires_grad(bi)) {
          Eigen::Map<Eigen::RowVectorXd> db(g.grad_buffer(bi).data(), out_dim);
          db += dY.colwise().sum();
        }
      });
}

}  // namespace

Var affine(Var x, Var weight, Var bias) { return affine_impl(x, weight, bias, true); }
Var linear(Var x, Var weight) { return affine_impl(x, weight, Var{}, false); }

namespace {

void check_codes(std::span<const int> codes, std::size_t vocab) {
  for (int c : codes) {
    if (c < 0 || static_cast<std::size_t>(c) >= vocab) {
      throw IndexError("embedding index " + std::to_string(c) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
  }
}

}  // namespace

Var embedding_lookup(Var table, std::span<const int> indices) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("embedding: table must be [V, E], got " + shape_string(tv.shape()));
  if (indices.empty()) throw ShapeError("embedding: empty index sequence");
  const std::size_t vocab = tv.dim(0);
  const std::size_t width = tv.dim(1);
  check_codes(indices, vocab);
  Tensor out({indices.size(), width});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(tv.data() + static_cast<std::size_t>(indices[i]) * width, width, out.data() + i * width);
  }
  const auto ti = table.id();
  std::vector<int> idx(indices.begin(), indices.end());
  return table.graph().record(OpKind::Embedding, {ti}, std::move(out),
                              [=, idx = std::move(idx)](Graph& g, std::size_t self) {
                                const auto dout = g.out_grad(self);
                                auto dt = g.grad_buffer(ti);
                                for (std::size_t i = 0; i < idx.size(); ++i) {
                                  double* row = dt.data() + static_cast<std::size_t>(idx[i]) * width;
                                  for (std::size_t e = 0; e < width; ++e) row[e] += dout[i * width + e];
                                }
                              });
}

Var embed_sequence(Var table, std::span<const int> codes, std::size_t batch, std::size_t steps) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("embedding: table must be [V, E], got " + shape_string(tv.shape()));
  if (codes.size() != batch * steps || codes.empty()) {
    throw ShapeError("embed_sequence: expected " + std::to_string(batch * steps) + " codes, got " +
                     std::to_string(codes.size()));
  }
  const std::size_t vocab = tv.dim(0);
  const std::size_t width = tv.dim(1);
  check_codes(codes, vocab);
  Tensor out({batch, width, steps});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const double* row = tv.data() + static_cast<std::size_t>(codes[b * steps + t]) * width;
      for (std::size_t e = 0; e < width; ++e) out[(b * width + e) * steps + t] = row[e];
    }
  }
  const auto ti = table.id();
  std::vector<int> idx(codes.begin(), codes.end());
  return table.graph().record(OpKind::Embedding, {ti}, std::move(out),
                              [=, idx = std::move(idx)](Graph& g, std::size_t self) {
                                const auto dout = g.out_grad(self);
                                auto dt = g.grad_buffer(ti);
                                for (std::size_t b = 0; b < batch; ++b) {
                                  for (std::size_t t = 0; t < steps; ++t) {
                                    double* row = dt.data() + static_cast<std::size_t>(idx[b * steps + t]) * width;
                                    for (std::size_t e = 0; e < width; ++e) {
                                      row[e] += dout[(b * width + e) * steps + t];
                                    }
                                  }
                                }
                              });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> extents;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    check_same_graph(parts[0], p);
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) throw ShapeError("concat: " + shape_string(s) + " incompatible with " + shape_string(first));
    out_shape[axis] += s[axis];
    extents.push_back(s[axis]);
    ids.push_back(p.id());
  }
  const AxisSplit split = split_at(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    const std::size_t chunk = extents[k] * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(pv.data() + o * chunk, chunk, out.data() + o * split.extent * split.inner + offset);
    }
    offset += chunk;
  }
  return parts[0].graph().record(OpKind::Concat, ids, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const std::size_t chunk = extents[k] * split.inner;
      if (g.requires_grad(ids[k])) {
        auto dp = g.grad_buffer(ids[k]);
        for (std::size_t o = 0; o < split.outer; ++o) {
          const double* src = dout.data() + o * split.extent * split.inner + offset;
          double* dst = dp.data() + o * chunk;
          for (std::size_t j = 0; j < chunk; ++j) dst[j] += src[j];
        }
      }
      offset += chunk;
    }
  });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

namespace {

enum class Binary { Add, Sub, Mul };

Var binary(Var a, Var b, Binary op) {
  check_same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  static constexpr const char* names[] = {"add", "sub", "mul"};
  require_same_shape(names[static_cast<int>(op)], av, bv);
  Tensor out(av.shape());
  const std::size_t n = av.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (op) {
      case Binary::Add: out[i] = av[i] + bv[i]; break;
      case Binary::Sub: out[i] = av[i] - bv[i]; break;
      case Binary::Mul: out[i] = av[i] * bv[i]; break;
    }
  }
  const auto ai = a.id();
  const auto bi = b.id();
  const OpKind kind = op == Binary::Add ? OpKind::Add : op == Binary::Sub ? OpKind::Sub : OpKind::Mul;
  return a.graph().record(kind, {ai, bi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    if (g.requires_grad(ai)) {
      auto da = g.grad_buffer(ai);
      if (op == Binary::Mul) {
        const Tensor& bv = g.value(bi);
        for (std::size_t i = 0; i < n; ++i) da[i] += dout[i] * bv[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) da[i] += dout[i];
      }
    }
    if (g.requires_grad(bi)) {
      auto db = g.grad_buffer(bi);
      if (op == Binary::Mul) {
        const Tensor& av = g.value(ai);
        for (std::size_t i = 0; i < n; ++i) db[i] += dout[i] * av[i];
      } else if (op == Binary::Sub) {
        for (std::size_t i = 0; i < n; ++i) db[i] -= dout[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) db[i] += dout[i];
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, Binary::Add); }
Var sub(Var a, Var b) { return binary(a, b, Binary::Sub); }
Var mul(Var a, Var b) { return binary(a, b, Binary::Mul); }

Var scale(Var x, double factor) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = factor * in[i];
  const auto xi = x.id();
  return x.graph().record(OpKind::Scale, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * dout[i];
  });
}

Var add_scalar(Var x, double offset) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] + offset;
  const auto xi = x.id();
  return x.graph().record(OpKind::AddScalar, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[i];
  });
}

Var abs(Var x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::fabs(in[i]);
  const auto xi = x.id();
  return x.graph().record(OpKind::Abs, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    const Tensor& in = g.value(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (in[i] > 0.0) {
        dx[i] += dout[i];
      } else if (in[i] < 0.0) {
        dx[i] -= dout[i];
      }
    }
  });
}

Var sum(Var x) {
  const Tensor& in = x.value();
  double s = 0.0;
  for (double v : in.values()) s += v;
  const auto xi = x.id();
  return x.graph().record(OpKind::Sum, {xi}, Tensor::scalar(s), [=](Graph& g, std::size_t self) {
    const double d = g.out_grad(self)[0];
    auto dx = g.grad_buffer(xi);
    for (auto& v : dx) v += d;
  });
}

Var mean(Var x) {
  const Tensor& in = x.value();
  double s = 0.0;
  for (double v : in.values()) s += v;
  const double n = static_cast<double>(in.size());
  const auto xi = x.id();
  return x.graph().record(OpKind::Mean, {xi}, Tensor::scalar(s / n), [=](Graph& g, std::size_t self) {
    const double d = g.out_grad(self)[0] / n;
    auto dx = g.grad_buffer(xi);
    for (auto& v : dx) v += d;
  });
}

Var select(Var x, std::size_t axis, std::size_t index) {
  const Tensor& in = x.value();
  const AxisSplit split = split_at(in.shape(), axis);
  if (index >= split.extent) {
    throw IndexError("select: index " + std::to_string(index) + " out of range for axis of " +
                     std::to_string(split.extent));
  }
  Shape out_shape;
  for (std::size_t i = 0; i < in.rank(); ++i) {
    if (i != axis) out_shape.push_back(in.dim(i));
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(in.data() + (o * split.extent + index) * split.inner, split.inner, out.data() + o * split.inner);
  }
  const auto xi = x.id();
  return x.graph().record(OpKind::Select, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    for (std::size_t o = 0; o < split.outer; ++o) {
      double* dst = dx.data() + (o * split.extent + index) * split.inner;
      for (std::size_t j = 0; j < split.inner; ++j) dst[j] += dout[o * split.inner + j];
    }
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& in = x.value();
  const AxisSplit split = split_at(in.shape(), axis);
  if (begin >= end || end > split.extent) {
    throw IndexError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for axis of " + std::to_string(split.extent));
  }
  Shape out_shape = in.shape();
  out_shape[axis] = end - begin;
  const std::size_t width = (end - begin) * split.inner;
  Tensor out(out_shape);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(in.data() + (o * split.extent + begin) * split.inner, width, out.data() + o * width);
  }
  const auto xi = x.id();
  return x.graph().record(OpKind::Slice, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    for (std::size_t o = 0; o < split.outer; ++o) {
      double* dst = dx.data() + (o * split.extent + begin) * split.inner;
      for (std::size_t j = 0; j < width; ++j) dst[j] += dout[o * width + j];
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const auto xi = x.id();
  return x.graph().record(OpKind::Reshape, {xi}, std::move(out), [=](Graph& g, std::size_t self) {
    const auto dout = g.out_grad(self);
    auto dx = g.grad_buffer(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[i];
  });
}

}  // namespace pmcast::ad
