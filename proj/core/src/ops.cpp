#include "spikelink/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spikelink::ag {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

bool is_suffix(const Shape& full, const Shape& tail) {
  if (tail.size() > full.size()) return false;
  return std::equal(tail.rbegin(), tail.rend(), full.rbegin());
}

std::vector<double>* grad_of(Node& parent) { return parent.requires_grad ? &parent.ensure_grad() : nullptr; }

}  // namespace

void SurrogateSpec::validate() const {
  if (!(width > 0.0) && !(kind == Kind::kBoxcar && width == 0.0)) {
    throw std::invalid_argument("surrogate width/slope must be positive");
  }
}

double surrogate_derivative(double v, const SurrogateSpec& spec) {
  switch (spec.kind) {
    case SurrogateSpec::Kind::kBoxcar:
      if (spec.width <= 0.0) return 0.0;
      return std::abs(v) <= 0.5 * spec.width ? 1.0 / spec.width : 0.0;
    case SurrogateSpec::Kind::kFastSigmoid: {
      const double d = 1.0 + spec.width * std::abs(v);
      return 1.0 / (d * d);
    }
  }
  return 0.0;
}

double relaxed_step(double v, const SurrogateSpec& spec) {
  switch (spec.kind) {
    case SurrogateSpec::Kind::kBoxcar:
      if (spec.width <= 0.0) return v >= 0.0 ? 1.0 : 0.0;
      return std::clamp(v / spec.width + 0.5, 0.0, 1.0);
    case SurrogateSpec::Kind::kFastSigmoid:
      return 0.5 + v / (1.0 + spec.width * std::abs(v));
  }
  return 0.0;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!is_suffix(a.shape(), b.shape())) shape_error("add", a.shape(), b.shape());
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t inner = bv.size();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i % inner];
  return make_result(a.shape(), std::move(out), {a, b}, [inner](Node& self) {
    if (auto* ga = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
    }
    if (auto* gb = grad_of(*self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[i % inner] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!is_suffix(a.shape(), b.shape())) shape_error("mul", a.shape(), b.shape());
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t inner = bv.size();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i % inner];
  return make_result(a.shape(), std::move(out), {a, b}, [inner](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (auto* ga = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] * bv[i % inner];
    }
    if (auto* gb = grad_of(*self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[i % inner] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = c * av[i];
  return make_result(a.shape(), std::move(out), {a}, [c](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += c * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor one_minus(const Tensor& a) { return add_scalar(scale(a, -1.0), 1.0); }

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) shape_error("reshape", a.shape(), shape);
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& w) {
  if (w.rank() != 2 || a.shape().back() != w.dim(0)) shape_error("matmul", a.shape(), w.shape());
  const std::size_t k = w.dim(0);
  const std::size_t m = w.dim(1);
  const std::size_t rows = a.size() / k;
  const auto av = a.values();
  const auto wv = w.values();
  std::vector<double> out(rows * m, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out.data() + r * m;
    for (std::size_t i = 0; i < k; ++i) {
      const double x = av[r * k + i];
      if (x == 0.0) continue;
      const double* wr = wv.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += x * wr[j];
    }
  }
  Shape shape = a.shape();
  shape.back() = m;
  return make_result(std::move(shape), std::move(out), {a, w}, [rows, k, m](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& wv = self.parents[1]->value;
    const auto& g = self.grad;
    if (auto* ga = grad_of(*self.parents[0])) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
          double acc = 0.0;
          const double* wr = wv.data() + i * m;
          const double* gr = g.data() + r * m;
          for (std::size_t j = 0; j < m; ++j) acc += gr[j] * wr[j];
          (*ga)[r * k + i] += acc;
        }
      }
    }
    if (auto* gw = grad_of(*self.parents[1])) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = g.data() + r * m;
        for (std::size_t i = 0; i < k; ++i) {
          const double x = av[r * k + i];
          if (x == 0.0) continue;
          double* wr = gw->data() + i * m;
          for (std::size_t j = 0; j < m; ++j) wr[j] += x * gr[j];
        }
      }
    }
  });
}

Tensor affine(const Tensor& a, const Tensor& w, const Tensor& b) { return add(matmul(a, w), b); }

Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0)) shape_error("batched_matmul", a.shape(), b.shape());
  const std::size_t batch = a.dim(0);
  const std::size_t n = a.dim(1);
  const std::size_t k = a.dim(2);
  const std::size_t m = transpose_b ? b.dim(1) : b.dim(2);
  if ((transpose_b ? b.dim(2) : b.dim(1)) != k) shape_error("batched_matmul", a.shape(), b.shape());
  // Element (i, j) of b_batch viewed as [k, m].
  auto bidx = [=](std::size_t s, std::size_t i, std::size_t j) {
    return transpose_b ? s * m * k + j * k + i : s * k * m + i * m + j;
  };
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(batch * n * m, 0.0);
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t r = 0; r < n; ++r) {
      double* o = out.data() + (s * n + r) * m;
      for (std::size_t i = 0; i < k; ++i) {
        const double x = av[(s * n + r) * k + i];
        if (x == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) o[j] += x * bv[bidx(s, i, j)];
      }
    }
  }
  return make_result({batch, n, m}, std::move(out), {a, b}, [=](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    const auto& g = self.grad;
    auto* ga = grad_of(*self.parents[0]);
    auto* gb = grad_of(*self.parents[1]);
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t r = 0; r < n; ++r) {
        const double* gr = g.data() + (s * n + r) * m;
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t ai = (s * n + r) * k + i;
          if (ga) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += gr[j] * bv[bidx(s, i, j)];
            (*ga)[ai] += acc;
          }
          if (gb && av[ai] != 0.0) {
            for (std::size_t j = 0; j < m; ++j) (*gb)[bidx(s, i, j)] += av[ai] * gr[j];
          }
        }
      }
    }
  });
}

Tensor mix_rows(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 3 || w.dim(1) != x.dim(1)) shape_error("mix_rows", w.shape(), x.shape());
  const std::size_t batch = x.dim(0);
  const std::size_t n = w.dim(0);
  const std::size_t n_in = w.dim(1);
  const std::size_t d = x.dim(2);
  const auto wv = w.values();
  const auto xv = x.values();
  std::vector<double> out(batch * n * d, 0.0);
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t j = 0; j < n_in; ++j) {
      const double* xr = xv.data() + (s * n_in + j) * d;
      for (std::size_t c = 0; c < d; ++c) {
        const double xval = xr[c];
        if (xval == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) out[(s * n + i) * d + c] += wv[i * n_in + j] * xval;
      }
    }
  }
  return make_result({batch, n, d}, std::move(out), {w, x}, [=](Node& self) {
    const auto& wv = self.parents[0]->value;
    const auto& xv = self.parents[1]->value;
    const auto& g = self.grad;
    auto* gw = grad_of(*self.parents[0]);
    auto* gx = grad_of(*self.parents[1]);
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g.data() + (s * n + i) * d;
        for (std::size_t j = 0; j < n_in; ++j) {
          const double* xr = xv.data() + (s * n_in + j) * d;
          if (gw) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += gr[c] * xr[c];
            (*gw)[i * n_in + j] += acc;
          }
          if (gx) {
            const double wij = wv[i * n_in + j];
            double* gxr = gx->data() + (s * n_in + j) * d;
            for (std::size_t c = 0; c < d; ++c) gxr[c] += wij * gr[c];
          }
        }
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({1}, {total}, {a}, [](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (double& g : ga) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor mean_tokens(const Tensor& x) {
  if (x.rank() != 3) throw std::invalid_argument("mean_tokens expects [B, L, D], got " + shape_string(x.shape()));
  const std::size_t batch = x.dim(0);
  const std::size_t tokens = x.dim(1);
  const std::size_t d = x.dim(2);
  if (tokens == 0) throw std::invalid_argument("mean_tokens over zero tokens");
  const double inv = 1.0 / static_cast<double>(tokens);
  const auto xv = x.values();
  std::vector<double> out(batch * d, 0.0);
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t l = 0; l < tokens; ++l) {
      for (std::size_t c = 0; c < d; ++c) out[s * d + c] += xv[(s * tokens + l) * d + c];
    }
  }
  for (double& v : out) v *= inv;
  return make_result({batch, d}, std::move(out), {x}, [=](Node& self) {
    auto& gx = self.parents[0]->ensure_grad();
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t l = 0; l < tokens; ++l) {
        for (std::size_t c = 0; c < d; ++c) gx[(s * tokens + l) * d + c] += inv * self.grad[s * d + c];
      }
    }
  });
}

Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t width = x.shape().back();
  if (begin + count > width || count == 0) {
    throw std::invalid_argument("slice_last: range out of bounds for shape " + shape_string(x.shape()));
  }
  const std::size_t rows = x.size() / width;
  const auto xv = x.values();
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(r * width + begin), count,
                out.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  Shape shape = x.shape();
  shape.back() = count;
  return make_result(std::move(shape), std::move(out), {x}, [=](Node& self) {
    auto& gx = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < count; ++c) gx[r * width + begin + c] += self.grad[r * count + c];
    }
  });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_last of nothing");
  Shape lead = parts.front().shape();
  lead.pop_back();
  std::size_t width = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    Shape l = p.shape();
    l.pop_back();
    if (l != lead) shape_error("concat_last", parts.front().shape(), p.shape());
    widths.push_back(p.shape().back());
    width += widths.back();
  }
  const std::size_t rows = shape_size(lead);
  std::vector<double> out(rows * width);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto pv = parts[i].values();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < widths[i]; ++c) out[r * width + offset + c] = pv[r * widths[i] + c];
    }
    offset += widths[i];
  }
  Shape shape = lead;
  shape.push_back(width);
  return make_result(std::move(shape), std::move(out), parts, [rows, width, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (auto* gp = grad_of(*self.parents[i])) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < widths[i]; ++c) (*gp)[r * widths[i] + c] += self.grad[r * width + offset + c];
        }
      }
      offset += widths[i];
    }
  });
}

Tensor heaviside(const Tensor& v, const SurrogateSpec& spec, SpikeMode mode) {
  const auto vv = v.values();
  std::vector<double> out(vv.size());
  if (mode == SpikeMode::kHard) {
    for (std::size_t i = 0; i < vv.size(); ++i) out[i] = vv[i] >= 0.0 ? 1.0 : 0.0;
  } else {
    for (std::size_t i = 0; i < vv.size(); ++i) out[i] = relaxed_step(vv[i], spec);
  }
  return make_result(v.shape(), std::move(out), {v}, [spec](Node& self) {
    const auto& vv = self.parents[0]->value;
    auto& gv = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < vv.size(); ++i) gv[i] += self.grad[i] * surrogate_derivative(vv[i], spec);
  });
}

Tensor bernoulli_ste(const Tensor& p, Rng& rng, SpikeMode mode) {
  const auto pv = p.values();
  std::vector<double> out(pv.size());
  if (mode == SpikeMode::kHard) {
    for (std::size_t i = 0; i < pv.size(); ++i) out[i] = rng.bernoulli(std::clamp(pv[i], 0.0, 1.0)) ? 1.0 : 0.0;
  } else {
    std::copy(pv.begin(), pv.end(), out.begin());
  }
  return make_result(p.shape(), std::move(out), {p}, [](Node& self) {
    auto& gp = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gp[i] += self.grad[i];
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, bool training) {
  const std::size_t features = x.shape().back();
  if (gamma.size() != features || beta.size() != features || stats.running_mean.size() != features ||
      stats.running_var.size() != features) {
    throw std::invalid_argument("batch_norm: feature dimension " + std::to_string(features) +
                                " does not match parameters/statistics");
  }
  const std::size_t rows = x.size() / features;
  if (training && rows == 0) throw std::invalid_argument("batch_norm: empty batch in training mode");

  const auto xv = x.values();
  std::vector<double> mu(features, 0.0);
  std::vector<double> var(features, 0.0);
  if (training) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t f = 0; f < features; ++f) mu[f] += xv[r * features + f];
    }
    for (double& m : mu) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t f = 0; f < features; ++f) {
        const double d = xv[r * features + f] - mu[f];
        var[f] += d * d;
      }
    }
    for (double& v : var) v /= static_cast<double>(rows);
    for (std::size_t f = 0; f < features; ++f) {
      stats.running_mean[f] = kBatchNormMomentum * stats.running_mean[f] + (1.0 - kBatchNormMomentum) * mu[f];
      stats.running_var[f] = kBatchNormMomentum * stats.running_var[f] + (1.0 - kBatchNormMomentum) * var[f];
    }
  } else {
    mu = stats.running_mean;
    var = stats.running_var;
  }

  std::vector<double> inv_std(features);
  for (std::size_t f = 0; f < features; ++f) inv_std[f] = 1.0 / std::sqrt(var[f] + kBatchNormEps);
  std::vector<double> xhat(xv.size());
  std::vector<double> out(xv.size());
  const auto gv = gamma.values();
  const auto bv = beta.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) {
      const std::size_t i = r * features + f;
      xhat[i] = (xv[i] - mu[f]) * inv_std[f];
      out[i] = gv[f] * xhat[i] + bv[f];
    }
  }

  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& g = self.grad;
                       const auto& gam = self.parents[1]->value;
                       if (auto* gg = grad_of(*self.parents[1])) {
                         for (std::size_t i = 0; i < g.size(); ++i) (*gg)[i % features] += g[i] * xhat[i];
                       }
                       if (auto* gb = grad_of(*self.parents[2])) {
                         for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % features] += g[i];
                       }
                       auto* gx = grad_of(*self.parents[0]);
                       if (!gx) return;
                       if (!training) {
                         for (std::size_t i = 0; i < g.size(); ++i) {
                           (*gx)[i] += g[i] * gam[i % features] * inv_std[i % features];
                         }
                         return;
                       }
                       std::vector<double> sum_d(features, 0.0);
                       std::vector<double> sum_dx(features, 0.0);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double d = g[i] * gam[i % features];
                         sum_d[i % features] += d;
                         sum_dx[i % features] += d * xhat[i];
                       }
                       const double n = static_cast<double>(rows);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const std::size_t f = i % features;
                         const double d = g[i] * gam[f];
                         (*gx)[i] += inv_std[f] / n * (n * d - sum_d[f] - xhat[i] * sum_dx[f]);
                       }
                     });
}

Tensor softmax_cross_entropy(const Tensor& z, std::span<const std::size_t> labels) {
  const std::size_t classes = z.shape().back();
  const std::size_t batch = z.size() / classes;
  if (z.rank() > 2 || labels.size() != batch) {
    throw std::invalid_argument("softmax_cross_entropy: expected one label per logit row");
  }
  for (std::size_t label : labels) {
    if (label >= classes) {
      throw std::out_of_range("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                              " classes");
    }
  }
  const auto zv = z.values();
  std::vector<double> probs(zv.size());
  double loss = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    const double* row = zv.data() + s * classes;
    const double peak = *std::max_element(row, row + classes);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(row[c] - peak);
    for (std::size_t c = 0; c < classes; ++c) probs[s * classes + c] = std::exp(row[c] - peak) / denom;
    loss += std::log(denom) + peak - row[labels[s]];
  }
  loss /= static_cast<double>(batch);
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return make_result({1}, {loss}, {z}, [=, probs = std::move(probs), lab = std::move(lab)](Node& self) {
    auto& gz = self.parents[0]->ensure_grad();
    const double w = self.grad[0] / static_cast<double>(batch);
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double onehot = c == lab[s] ? 1.0 : 0.0;
        gz[s * classes + c] += w * (probs[s * classes + c] - onehot);
      }
    }
  });
}

Tensor time_hop_preactivation(const Tensor& x, const Tensor& a, const Tensor& eps, std::size_t k) {
  if (x.rank() != 3 || a.rank() != 1 || eps.rank() != 3 || eps.dim(0) != x.dim(1) || eps.dim(1) != x.dim(2) ||
      eps.dim(2) != a.dim(0) || k >= a.dim(0)) {
    throw std::invalid_argument("time_hop_preactivation: shape mismatch between x " + shape_string(x.shape()) +
                                ", map " + shape_string(a.shape()) + ", bias " + shape_string(eps.shape()));
  }
  const std::size_t slots = a.dim(0);
  const std::size_t neurons = x.dim(1) * x.dim(2);
  const auto xv = x.values();
  const auto ev = eps.values();
  const double ak = a.values()[k];
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = ak * xv[i] + ev[(i % neurons) * slots + k];
  return make_result(x.shape(), std::move(out), {x, a, eps}, [=](Node& self) {
    const auto& xv = self.parents[0]->value;
    const double ak = self.parents[1]->value[k];
    const auto& g = self.grad;
    if (auto* gx = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * ak;
    }
    if (auto* ga = grad_of(*self.parents[1])) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
      (*ga)[k] += acc;
    }
    if (auto* ge = grad_of(*self.parents[2])) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ge)[(i % neurons) * slots + k] += g[i];
    }
  });
}

}  // namespace spikelink::ag
