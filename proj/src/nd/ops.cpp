#include "ddavs/nd/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ddavs/error.hpp"

namespace ddavs::nd {

namespace {

void require_2d(const Var& v, const char* op) {
  if (v.value().ndim() != 2) {
    throw DimensionError(std::string(op) + " expects a 2-D array, got " +
                         shape_str(v.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

// Elementwise op y = f(x) with derivative df(x, y).
template <typename F, typename D>
Var elementwise(Var x, F f, D df) {
  const Array& xv = x.value();
  Array out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, df](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    const Array& xv = t.value(ix);
    const Array& yv = t.value(self);
    Array& gx = t.grad_mut(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Var matmul(Var a, Var b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul inner dimensions differ: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  Array out({a.rows(), b.cols()});
  gemm(a.value(), false, b.value(), false, out);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(ia)) gemm(g, false, t.value(ib), true, t.grad_mut(ia), 1.0, 1.0);
    if (t.requires_grad(ib)) gemm(t.value(ia), true, g, false, t.grad_mut(ib), 1.0, 1.0);
  });
}

Var matmul_nt(Var a, Var b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt inner dimensions differ: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()) + "^T");
  }
  Array out({a.rows(), b.rows()});
  gemm(a.value(), false, b.value(), true, out);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(ia)) gemm(g, false, t.value(ib), false, t.grad_mut(ia), 1.0, 1.0);
    if (t.requires_grad(ib)) gemm(g, true, t.value(ia), false, t.grad_mut(ib), 1.0, 1.0);
  });
}

Var transpose(Var a) {
  require_2d(a, "transpose");
  const Array& av = a.value();
  const std::size_t m = av.rows(), n = av.cols();
  Array out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = av(i, j);
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, m, n](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    Array& ga = t.grad_mut(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga(i, j) += g(j, i);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Array out = a.value();
  out += b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad_mut(ia) += g;
    if (t.requires_grad(ib)) t.grad_mut(ib) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const Array& av = a.value();
  const Array& bv = b.value();
  Array out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad_mut(ia) += g;
    if (t.requires_grad(ib)) {
      Array& gb = t.grad_mut(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const Array& av = a.value();
  const Array& bv = b.value();
  Array out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(ia)) {
      const Array& bv = t.value(ib);
      Array& ga = t.grad_mut(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      const Array& av = t.value(ia);
      Array& gb = t.grad_mut(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  return elementwise(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return elementwise(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var add_row(Var x, Var b) {
  require_2d(x, "add_row");
  const std::size_t m = x.rows(), n = x.cols();
  if (b.value().size() != n) {
    throw DimensionError("add_row bias " + shape_str(b.shape()) + " does not match " +
                         shape_str(x.shape()));
  }
  Array out = x.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) += bv[j];
  const auto ix = x.id(), ib = b.id();
  return x.tape().record(std::move(out), {x, b}, [ix, ib, m, n](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(ix)) t.grad_mut(ix) += g;
    if (t.requires_grad(ib)) {
      Array& gb = t.grad_mut(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g(i, j);
    }
  });
}

Var relu(Var x) {
  return elementwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var x) {
  return elementwise(
      x,
      [](double v) {
        return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
      },
      [](double v, double) {
        const double u = kGeluC * (v + kGeluA * v * v * v);
        const double th = std::tanh(u);
        const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
      });
}

Var sigmoid(Var x) {
  return elementwise(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var log(Var x) {
  return elementwise(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var exp(Var x) {
  return elementwise(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var pow_scalar(Var x, double e) {
  return elementwise(
      x, [e](double v) { return e == 0.0 ? 1.0 : std::pow(v, e); },
      [e](double v, double) { return e == 0.0 ? 0.0 : e * std::pow(v, e - 1.0); });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const auto ix = x.id();
  return x.tape().record(Array::scalar(s), {x}, [ix](Tape& t, std::int32_t self) {
    const double g = t.grad(self)[0];
    Array& gx = t.grad_mut(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw DimensionError("mean of an empty array");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var mean_rows(Var x) {
  require_2d(x, "mean_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (m == 0) throw DimensionError("mean_rows of an empty array");
  const Array& xv = x.value();
  Array out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += xv(i, j);
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, m, n](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    Array& gx = t.grad_mut(ix);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx(i, j) += g[j] * inv;
  });
}

Var softmax_rows(Var x) {
  require_2d(x, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  const Array& xv = x.value();
  Array out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double* o = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, m, n](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    const Array& y = t.value(self);
    Array& gx = t.grad_mut(ix);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < n; ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var log_softmax_rows(Var x) {
  require_2d(x, "log_softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  const Array& xv = x.value();
  Array out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) out(i, j) = row[j] - lse;
  }
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, m, n](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    const Array& y = t.value(self);
    Array& gx = t.grad_mut(ix);
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g(i, j);
      for (std::size_t j = 0; j < n; ++j) gx(i, j) += g(i, j) - std::exp(y(i, j)) * gs;
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require_2d(x, "layer_norm");
  const std::size_t m = x.rows(), d = x.cols();
  if (d < 2) throw DimensionError("layer_norm over a degenerate dimension of size " +
                                  std::to_string(d));
  if (!(eps > 0.0)) throw ParameterError("layer_norm eps must be positive");
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " do not match width " +
                         std::to_string(d));
  }
  const Array& xv = x.value();
  const Array& gv = gain.value();
  const Array& bv = bias.value();
  Array out(xv.shape());
  // Normalised values and inverse deviations are kept for the backward pass.
  Array xhat(xv.shape());
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xv(i, j);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xv(i, j) - mu) * (xv(i, j) - mu);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (xv(i, j) - mu) * inv_std[i];
      out(i, j) = xhat(i, j) * gv[j] + bv[j];
    }
  }
  const auto ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [ix, ig, ib, m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, std::int32_t self) {
        const Array& g = t.grad(self);
        if (t.requires_grad(ig)) {
          Array& gg = t.grad_mut(ig);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g(i, j) * xhat(i, j);
        }
        if (t.requires_grad(ib)) {
          Array& gb = t.grad_mut(ib);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g(i, j);
        }
        if (t.requires_grad(ix)) {
          const Array& gv = t.value(ig);
          Array& gx = t.grad_mut(ix);
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t i = 0; i < m; ++i) {
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g(i, j) * gv[j];
              s1 += dh;
              s2 += dh * xhat(i, j);
            }
            s1 *= inv_d;
            s2 *= inv_d;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g(i, j) * gv[j];
              gx(i, j) += inv_std[i] * (dh - s1 - xhat(i, j) * s2);
            }
          }
        }
      });
}

Var normalize_rows(Var x, double floor) {
  require_2d(x, "normalize_rows");
  const std::size_t m = x.rows(), n = x.cols();
  const Array& xv = x.value();
  Array out(xv.shape());
  std::vector<double> norms(m);
  std::vector<bool> clamped(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += xv(i, j) * xv(i, j);
    const double nr = std::sqrt(s);
    clamped[i] = nr <= floor;
    norms[i] = clamped[i] ? floor : nr;
    for (std::size_t j = 0; j < n; ++j) out(i, j) = xv(i, j) / norms[i];
  }
  const auto ix = x.id();
  return x.tape().record(
      std::move(out), {x},
      [ix, m, n, norms = std::move(norms), clamped = std::move(clamped)](Tape& t,
                                                                         std::int32_t self) {
        const Array& g = t.grad(self);
        const Array& y = t.value(self);
        Array& gx = t.grad_mut(ix);
        for (std::size_t i = 0; i < m; ++i) {
          double dot = 0.0;
          if (!clamped[i])
            for (std::size_t j = 0; j < n; ++j) dot += y(i, j) * g(i, j);
          for (std::size_t j = 0; j < n; ++j)
            gx(i, j) += (g(i, j) - y(i, j) * dot) / norms[i];
        }
      });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.value().size()) {
    throw DimensionError("cannot reshape " + shape_str(x.shape()) + " to " +
                         shape_str(shape));
  }
  const auto ix = x.id();
  return x.tape().record(x.value().reshaped(std::move(shape)), {x},
                         [ix](Tape& t, std::int32_t self) {
                           const Array& g = t.grad(self);
                           Array& gx = t.grad_mut(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                         });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  require_2d(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (start + count > n) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceeds " + shape_str(x.shape()));
  }
  const Array& xv = x.value();
  Array out({m, count});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = xv(i, start + j);
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x},
                         [ix, m, start, count](Tape& t, std::int32_t self) {
                           const Array& g = t.grad(self);
                           Array& gx = t.grad_mut(ix);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < count; ++j)
                               gx(i, start + j) += g(i, j);
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Tape& tape = parts.front().tape();
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_2d(p, "concat_cols");
    if (p.rows() != m) {
      throw DimensionError("concat_cols row mismatch: " + shape_str(p.shape()) + " vs " +
                           std::to_string(m) + " rows");
    }
    total += p.cols();
  }
  Array out({m, total});
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Array& pv = p.value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += pv.cols();
  }
  return tape.record(std::move(out), parts, [ids, offsets, m](Tape& t, std::int32_t self) {
    const Array& g = t.grad(self);
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!t.requires_grad(ids[p])) continue;
      Array& gp = t.grad_mut(ids[p]);
      const std::size_t w = gp.cols();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, offsets[p] + j);
    }
  });
}

namespace {

struct Interp1d {
  std::vector<std::size_t> i0, i1;
  std::vector<double> w1;
};

Interp1d interp_table(std::size_t in, std::size_t out) {
  Interp1d t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.w1.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    t.i0[o] = lo;
    t.i1[o] = std::min(lo + 1, in - 1);
    t.w1[o] = src - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

Var upsample_bilinear(Var x, std::size_t h, std::size_t w, std::size_t out_h,
                      std::size_t out_w) {
  require_2d(x, "upsample_bilinear");
  if (x.rows() != h * w || h == 0 || w == 0) {
    throw DimensionError("upsample_bilinear: " + shape_str(x.shape()) +
                         " is not a " + std::to_string(h) + "x" + std::to_string(w) +
                         " token grid");
  }
  const std::size_t c = x.cols();
  auto ty = interp_table(h, out_h);
  auto tx = interp_table(w, out_w);
  const Array& xv = x.value();
  Array out({out_h * out_w, c});
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double wy1 = ty.w1[oy], wy0 = 1.0 - wy1;
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double wx1 = tx.w1[ox], wx0 = 1.0 - wx1;
      const double* a = xv.data() + (ty.i0[oy] * w + tx.i0[ox]) * c;
      const double* b = xv.data() + (ty.i0[oy] * w + tx.i1[ox]) * c;
      const double* cc = xv.data() + (ty.i1[oy] * w + tx.i0[ox]) * c;
      const double* d = xv.data() + (ty.i1[oy] * w + tx.i1[ox]) * c;
      double* o = out.data() + (oy * out_w + ox) * c;
      for (std::size_t k = 0; k < c; ++k) {
        o[k] = wy0 * (wx0 * a[k] + wx1 * b[k]) + wy1 * (wx0 * cc[k] + wx1 * d[k]);
      }
    }
  }
  const auto ix = x.id();
  return x.tape().record(
      std::move(out), {x},
      [ix, w, out_h, out_w, c, ty = std::move(ty), tx = std::move(tx)](Tape& t,
                                                                      std::int32_t self) {
        const Array& g = t.grad(self);
        Array& gx = t.grad_mut(ix);
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const double wy1 = ty.w1[oy], wy0 = 1.0 - wy1;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double wx1 = tx.w1[ox], wx0 = 1.0 - wx1;
            const double* go = g.data() + (oy * out_w + ox) * c;
            double* a = gx.data() + (ty.i0[oy] * w + tx.i0[ox]) * c;
            double* b = gx.data() + (ty.i0[oy] * w + tx.i1[ox]) * c;
            double* cc = gx.data() + (ty.i1[oy] * w + tx.i0[ox]) * c;
            double* d = gx.data() + (ty.i1[oy] * w + tx.i1[ox]) * c;
            for (std::size_t k = 0; k < c; ++k) {
              a[k] += go[k] * wy0 * wx0;
              b[k] += go[k] * wy0 * wx1;
              cc[k] += go[k] * wy1 * wx0;
              d[k] += go[k] * wy1 * wx1;
            }
          }
        }
      });
}

Var space_to_depth(Var x, std::size_t h, std::size_t w, std::size_t f) {
  require_2d(x, "space_to_depth");
  if (x.rows() != h * w || f == 0) {
    throw DimensionError("space_to_depth: " + shape_str(x.shape()) + " is not a " +
                         std::to_string(h) + "x" + std::to_string(w) + " token grid");
  }
  const std::size_t c = x.cols();
  const std::size_t oh = (h + f - 1) / f, ow = (w + f - 1) / f;
  const std::size_t oc = c * f * f;
  const Array& xv = x.value();
  Array out({oh * ow, oc});
  for (std::size_t by = 0; by < oh; ++by)
    for (std::size_t bx = 0; bx < ow; ++bx)
      for (std::size_t dy = 0; dy < f; ++dy)
        for (std::size_t dx = 0; dx < f; ++dx) {
          const std::size_t y = by * f + dy, xx = bx * f + dx;
          if (y >= h || xx >= w) continue;
          const double* src = xv.data() + (y * w + xx) * c;
          double* dst = out.data() + (by * ow + bx) * oc + (dy * f + dx) * c;
          std::copy(src, src + c, dst);
        }
  const auto ix = x.id();
  return x.tape().record(std::move(out), {x},
                         [ix, h, w, f, c, oh, ow, oc](Tape& t, std::int32_t self) {
                           const Array& g = t.grad(self);
                           Array& gx = t.grad_mut(ix);
                           for (std::size_t by = 0; by < oh; ++by)
                             for (std::size_t bx = 0; bx < ow; ++bx)
                               for (std::size_t dy = 0; dy < f; ++dy)
                                 for (std::size_t dx = 0; dx < f; ++dx) {
                                   const std::size_t y = by * f + dy, xx = bx * f + dx;
                                   if (y >= h || xx >= w) continue;
                                   const double* src =
                                       g.data() + (by * ow + bx) * oc + (dy * f + dx) * c;
                                   double* dst = gx.data() + (y * w + xx) * c;
                                   for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
                                 }
                         });
}

Var scaled_dot_attention(Var q, Var k, Var v, Var* weights) {
  require_2d(q, "attention");
  require_2d(k, "attention");
  require_2d(v, "attention");
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw DimensionError("attention shape mismatch: q " + shape_str(q.shape()) + ", k " +
                         shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var a = softmax_rows(scale(matmul_nt(q, k), inv_sqrt_d));
  if (weights) *weights = a;
  return matmul(a, v);
}

}  // namespace ddavs::nd
