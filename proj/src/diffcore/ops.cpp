#include "fnnet/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "fnnet/error.hpp"

namespace fnnet::diff {

namespace k = fnnet::kernels;
using k::Trans;

std::string to_string(SoftThresholdKind kind) {
  return kind == SoftThresholdKind::kLinear ? "linear" : "quadratic";
}

SoftThresholdKind soft_threshold_kind_from_string(const std::string& s) {
  if (s == "linear") return SoftThresholdKind::kLinear;
  if (s == "quadratic") return SoftThresholdKind::kQuadratic;
  throw ContractError("unknown soft threshold kind '" + s + "' (expected linear|quadratic)");
}

double soft_threshold_value(double x, double t, SoftThresholdKind kind) {
  const double u = std::max(std::abs(x) - t, 0.0);
  const double mag = kind == SoftThresholdKind::kLinear ? u : u * (1.0 + u);
  return x < 0.0 ? -mag : mag;
}

namespace {

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(v.shape()));
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

template <class F, class DF>
Var unary(const char* op, Var x, F f, DF df) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return x.graph().record(op, std::move(out), {x},
                          [x, df](Graph& g, const Tensor& y, const Tensor& gy) {
                            const Tensor& xv = g.value(x);
                            Tensor& gx = g.grad(x);
                            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * df(xv[i], y[i]);
                          });
}

}  // namespace

Var linear_map(Var x, Var w, Var b) {
  require_rank(x, 2, "linear_map");
  require_rank(w, 2, "linear_map");
  const std::size_t cin = x.value().rows(), n = x.value().cols();
  const std::size_t cout = w.value().rows();
  if (w.value().cols() != cin)
    throw DimensionError("linear_map: weight " + shape_string(w.shape()) + " cannot map input " +
                         shape_string(x.shape()));
  if (b.value().size() != cout)
    throw DimensionError("linear_map: bias " + shape_string(b.shape()) + " for " +
                         std::to_string(cout) + " outputs");

  Tensor out(Shape{cout, n});
  k::parallel::gemm(Trans::kNo, Trans::kNo, {cout, n, cin}, w.value().ptr(), x.value().ptr(), out.ptr());
  k::parallel::add_row_bias(cout, n, b.value().ptr(), out.ptr());

  return x.graph().record(
      "linear_map", std::move(out), {x, w, b},
      [x, w, b, cin, cout, n](Graph& g, const Tensor&, const Tensor& gy) {
        if (g.requires_grad(x))
          k::parallel::gemm(Trans::kYes, Trans::kNo, {cin, n, cout}, g.value(w).ptr(), gy.ptr(),
                            g.grad(x).ptr());
        if (g.requires_grad(w))
          k::parallel::gemm(Trans::kNo, Trans::kYes, {cout, cin, n}, gy.ptr(), g.value(x).ptr(),
                            g.grad(w).ptr());
        if (g.requires_grad(b)) k::parallel::sum_rows_into(cout, n, gy.ptr(), g.grad(b).ptr());
      });
}

Var matmul(Var a, Var b, Trans ta, Trans tb) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = ta == Trans::kNo ? av.rows() : av.cols();
  const std::size_t ka = ta == Trans::kNo ? av.cols() : av.rows();
  const std::size_t kb = tb == Trans::kNo ? bv.rows() : bv.cols();
  const std::size_t n = tb == Trans::kNo ? bv.cols() : bv.rows();
  if (ka != kb)
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  Tensor out(Shape{m, n});
  k::parallel::gemm(ta, tb, {m, n, ka}, av.ptr(), bv.ptr(), out.ptr());

  return a.graph().record(
      "matmul", std::move(out), {a, b}, [a, b, ta, tb, m, n, ka](Graph& g, const Tensor&, const Tensor& gy) {
        // C = op(A) op(B): dop(A) = dC op(B)^T, dop(B) = op(A)^T dC.
        if (g.requires_grad(a)) {
          Tensor& ga = g.grad(a);
          if (ta == Trans::kNo)
            k::parallel::gemm(Trans::kNo, tb == Trans::kNo ? Trans::kYes : Trans::kNo, {m, ka, n}, gy.ptr(),
                              g.value(b).ptr(), ga.ptr());
          else  // dA = op(B) dC^T
            k::parallel::gemm(tb, Trans::kYes, {ka, m, n}, g.value(b).ptr(), gy.ptr(), ga.ptr());
        }
        if (g.requires_grad(b)) {
          Tensor& gb = g.grad(b);
          if (tb == Trans::kNo)
            k::parallel::gemm(ta == Trans::kNo ? Trans::kYes : Trans::kNo, Trans::kNo, {ka, n, m},
                              g.value(a).ptr(), gy.ptr(), gb.ptr());
          else  // dB = dC^T op(A)
            k::parallel::gemm(Trans::kYes, ta, {n, ka, m}, gy.ptr(), g.value(a).ptr(), gb.ptr());
        }
      });
}

Var add(Var a, Var b) {
  if (a.shape() != b.shape())
    throw DimensionError("add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  accumulate(out, b.value());
  return a.graph().record("add", std::move(out), {a, b}, [a, b](Graph& g, const Tensor&, const Tensor& gy) {
    if (g.requires_grad(a)) accumulate(g.grad(a), gy);
    if (g.requires_grad(b)) accumulate(g.grad(b), gy);
  });
}

Var mul(Var a, Var b) {
  if (a.shape() != b.shape())
    throw DimensionError("mul: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph().record("mul", std::move(out), {a, b}, [a, b](Graph& g, const Tensor&, const Tensor& gy) {
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad(a);
      const Tensor& bv = g.value(b);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad(b);
      const Tensor& av = g.value(a);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= s;
  return a.graph().record("scale", std::move(out), {a}, [a, s](Graph& g, const Tensor&, const Tensor& gy) {
    Tensor& ga = g.grad(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += s * gy[i];
  });
}

Var concat_rows(Var a, Var b) {
  require_rank(a, 2, "concat_rows");
  require_rank(b, 2, "concat_rows");
  if (a.value().cols() != b.value().cols())
    throw DimensionError("concat_rows: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const std::size_t na = a.value().size();
  Tensor out(Shape{a.value().rows() + b.value().rows(), a.value().cols()});
  std::copy_n(a.value().ptr(), na, out.ptr());
  std::copy_n(b.value().ptr(), b.value().size(), out.ptr() + na);
  return a.graph().record("concat_rows", std::move(out), {a, b},
                          [a, b, na](Graph& g, const Tensor&, const Tensor& gy) {
                            if (g.requires_grad(a)) {
                              Tensor& ga = g.grad(a);
                              for (std::size_t i = 0; i < na; ++i) ga[i] += gy[i];
                            }
                            if (g.requires_grad(b)) {
                              Tensor& gb = g.grad(b);
                              for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[na + i];
                            }
                          });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.graph().record("reshape", std::move(out), {a}, [a](Graph& g, const Tensor&, const Tensor& gy) {
    Tensor& ga = g.grad(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
  });
}

Var relu(Var x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var abs(Var x) {
  return unary(
      "abs", x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var context_normalize(Var f, double eps) {
  require_rank(f, 2, "context_normalize");
  const std::size_t c = f.value().rows(), n = f.value().cols();
  if (n < 2) throw ContractError("context_normalize: need at least 2 correspondences, got " + std::to_string(n));
  Tensor out(Shape{c, n});
  auto inv_std = std::make_shared<std::vector<double>>(c);
  k::parallel::normalize_rows(c, n, eps, f.value().ptr(), out.ptr(), inv_std->data());
  return f.graph().record("context_normalize", std::move(out), {f},
                          [f, c, n, inv_std](Graph& g, const Tensor& y, const Tensor& gy) {
                            k::parallel::normalize_rows_backward(c, n, y.ptr(), inv_std->data(), gy.ptr(),
                                                                 g.grad(f).ptr());
                          });
}

BatchNorm::BatchNorm(const std::string& name, std::size_t features)
    : gamma(name + ".gamma", Tensor(Shape{features}, 1.0)),
      beta(name + ".beta", Tensor(Shape{features}, 0.0)),
      running_mean(Shape{features}, 0.0),
      running_var(Shape{features}, 1.0) {}

Var batch_norm(Var x, BatchNorm& bn, Mode mode, std::size_t batch_axis) {
  require_rank(x, 2, "batch_norm");
  if (batch_axis > 1) throw DimensionError("batch_norm: batch axis must be 0 or 1");
  const Tensor& xv = x.value();
  const std::size_t nb = xv.dim(batch_axis);
  const std::size_t nf = xv.dim(1 - batch_axis);
  if (nb == 0) throw DimensionError("batch_norm: empty batch");
  if (bn.gamma.value.size() != nf)
    throw DimensionError("batch_norm: " + std::to_string(bn.gamma.value.size()) + " features configured, input " +
                         shape_string(xv.shape()));
  // Element (feature f, sample b).
  const std::size_t sf = batch_axis == 1 ? nb : 1;
  const std::size_t sb = batch_axis == 1 ? 1 : nf;

  Graph& graph = x.graph();
  Var gamma = graph.param(bn.gamma);
  Var beta = graph.param(bn.beta);

  const bool batch_stats = mode == Mode::kTrain && nb >= 2;
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    double mean, var;
    if (batch_stats) {
      mean = 0.0;
      for (std::size_t b = 0; b < nb; ++b) mean += xv[f * sf + b * sb];
      mean /= static_cast<double>(nb);
      var = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const double d = xv[f * sf + b * sb] - mean;
        var += d * d;
      }
      var /= static_cast<double>(nb);
    } else {
      mean = bn.running_mean[f];
      var = bn.running_var[f];
    }
    inv_std[f] = 1.0 / std::sqrt(var + bn.eps);
    for (std::size_t b = 0; b < nb; ++b) xhat[f * sf + b * sb] = (xv[f * sf + b * sb] - mean) * inv_std[f];

    if (mode == Mode::kTrain) {
      const double m = bn.momentum;
      if (batch_stats) {
        bn.running_mean[f] = m * bn.running_mean[f] + (1.0 - m) * mean;
        bn.running_var[f] = m * bn.running_var[f] + (1.0 - m) * var;
      } else {
        const double d = xv[f * sf] - bn.running_mean[f];
        bn.running_mean[f] = m * bn.running_mean[f] + (1.0 - m) * xv[f * sf];
        bn.running_var[f] = m * bn.running_var[f] + (1.0 - m) * d * d;
      }
    }
  }

  Tensor out(xv.shape());
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t b = 0; b < nb; ++b) out[f * sf + b * sb] = gv[f] * xhat[f * sf + b * sb] + bv[f];

  auto saved = std::make_shared<std::pair<Tensor, std::vector<double>>>(std::move(xhat), std::move(inv_std));
  return graph.record(
      "batch_norm", std::move(out), {x, gamma, beta},
      [x, gamma, beta, saved, nb, nf, sf, sb, batch_stats](Graph& g, const Tensor&, const Tensor& gy) {
        const Tensor& xh = saved->first;
        const auto& is = saved->second;
        const Tensor& gv = g.value(gamma);
        for (std::size_t f = 0; f < nf; ++f) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < nb; ++b) {
            sum_g += gy[f * sf + b * sb];
            sum_gx += gy[f * sf + b * sb] * xh[f * sf + b * sb];
          }
          if (g.requires_grad(gamma)) g.grad(gamma)[f] += sum_gx;
          if (g.requires_grad(beta)) g.grad(beta)[f] += sum_g;
          if (!g.requires_grad(x)) continue;
          Tensor& gx = g.grad(x);
          const double k = gv[f] * is[f];
          if (batch_stats) {
            const double mg = sum_g / static_cast<double>(nb), mgx = sum_gx / static_cast<double>(nb);
            for (std::size_t b = 0; b < nb; ++b) {
              const std::size_t i = f * sf + b * sb;
              gx[i] += k * (gy[i] - mg - xh[i] * mgx);
            }
          } else {
            for (std::size_t b = 0; b < nb; ++b) gx[f * sf + b * sb] += k * gy[f * sf + b * sb];
          }
        }
      });
}

Var mean_axis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (xv.rank() == 1) {
    if (axis != 0) throw DimensionError("mean_axis: axis out of range");
    double s = 0.0;
    for (double v : xv.data()) s += v;
    const std::size_t n = xv.size();
    return x.graph().record("mean_axis", Tensor::scalar(s / static_cast<double>(n)), {x},
                            [x, n](Graph& g, const Tensor&, const Tensor& gy) {
                              Tensor& gx = g.grad(x);
                              for (auto& v : gx.data()) v += gy[0] / static_cast<double>(n);
                            });
  }
  require_rank(x, 2, "mean_axis");
  if (axis > 1) throw DimensionError("mean_axis: axis out of range");
  const std::size_t r = xv.rows(), c = xv.cols();
  const std::size_t len = axis == 1 ? c : r;
  Tensor out(Shape{axis == 1 ? r : c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[axis == 1 ? i : j] += xv(i, j);
  for (auto& v : out.data()) v /= static_cast<double>(len);
  return x.graph().record("mean_axis", std::move(out), {x}, [x, axis, r, c, len](Graph& g, const Tensor&, const Tensor& gy) {
    Tensor& gx = g.grad(x);
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx(i, j) += gy[axis == 1 ? i : j] * inv;
  });
}

Var sum_all(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.graph().record("sum_all", Tensor::scalar(s), {x}, [x](Graph& g, const Tensor&, const Tensor& gy) {
    for (auto& v : g.grad(x).data()) v += gy[0];
  });
}

Var softmax_axis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (xv.rank() != 1 && xv.rank() != 2) throw DimensionError("softmax_axis: rank 1 or 2 expected");
  const bool vec = xv.rank() == 1;
  if ((vec && axis != 0) || axis > 1) throw DimensionError("softmax_axis: axis out of range");
  const std::size_t r = vec ? 1 : xv.rows();
  const std::size_t c = vec ? xv.size() : xv.cols();
  const bool along_rows = vec || axis == 1;
  Tensor out(xv.shape());
  if (along_rows)
    k::parallel::softmax_rows(r, c, xv.ptr(), out.ptr());
  else
    k::parallel::softmax_cols(r, c, xv.ptr(), out.ptr());
  return x.graph().record("softmax_axis", std::move(out), {x},
                          [x, r, c, along_rows](Graph& g, const Tensor& y, const Tensor& gy) {
                            if (along_rows)
                              k::parallel::softmax_rows_backward(r, c, y.ptr(), gy.ptr(), g.grad(x).ptr());
                            else
                              k::parallel::softmax_cols_backward(r, c, y.ptr(), gy.ptr(), g.grad(x).ptr());
                          });
}

Var soft_threshold(Var x, Var t, SoftThresholdKind kind) {
  require_rank(x, 2, "soft_threshold");
  const Tensor& xv = x.value();
  const Tensor& tv = t.value();
  const std::size_t c = xv.rows(), n = xv.cols();
  if (tv.size() != c)
    throw DimensionError("soft_threshold: " + std::to_string(tv.size()) + " thresholds for " +
                         std::to_string(c) + " channels");
  for (double v : tv.data())
    if (v < 0.0) throw ContractError("soft_threshold: negative threshold " + std::to_string(v));

  Tensor out(xv.shape());
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = soft_threshold_value(xv(i, j), tv[i], kind);

  return x.graph().record("soft_threshold", std::move(out), {x, t},
                          [x, t, c, n, kind](Graph& g, const Tensor&, const Tensor& gy) {
                            const Tensor& xv = g.value(x);
                            const Tensor& tv = g.value(t);
                            Tensor* gx = g.requires_grad(x) ? &g.grad(x) : nullptr;
                            Tensor* gt = g.requires_grad(t) ? &g.grad(t) : nullptr;
                            for (std::size_t i = 0; i < c; ++i) {
                              for (std::size_t j = 0; j < n; ++j) {
                                const double v = xv(i, j);
                                const double u = std::abs(v) - tv[i];
                                if (u <= 0.0) continue;
                                const double slope = kind == SoftThresholdKind::kLinear ? 1.0 : 1.0 + 2.0 * u;
                                const double gyv = gy(i, j);
                                if (gx) (*gx)(i, j) += gyv * slope;
                                if (gt) (*gt)[i] -= gyv * slope * (v < 0.0 ? -1.0 : 1.0);
                              }
                            }
                          });
}

}  // namespace fnnet::diff
