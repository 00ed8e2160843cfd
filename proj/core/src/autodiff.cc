// Copyright 2026 The Pseudoshot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pseudoshot/autodiff.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "pseudoshot/error.h"

namespace pseudoshot::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

thread_local bool grad_enabled = true;

// Creates the output node; records inputs and the backward closure only when
// some input needs a gradient.
Var MakeResult(Tensor value, std::vector<std::shared_ptr<Node>> inputs,
               std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled) {
    for (const auto& in : inputs) needs |= in->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void RequireRank(const Var& x, int rank, const char* op) {
  if (x.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     ShapeToString(x.shape()));
  }
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

double SortedSum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

}  // namespace

Tensor& Node::Grad() {
  if (grad.empty() && value.size() > 0) grad = Tensor::Zeros(value.shape());
  if (grad.shape() != value.shape()) grad = Tensor::Zeros(value.shape());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Var::grad() const {
  if (node_->grad.empty()) return Tensor::Zeros(node_->value.shape());
  return node_->grad;
}

void Var::ZeroGrad() { node_->grad = Tensor(); }

void Backward(const Var& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw ShapeError("Backward needs a scalar loss, got " +
                     (loss.defined() ? ShapeToString(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* in = node->inputs[next++].get();
      if (in->requires_grad && seen.insert(in).second) stack.emplace_back(in, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->Grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }
bool GradEnabled() { return grad_enabled; }

Var Conv2d(const Var& x, const Var& weight, int pad) {
  RequireRank(x, 4, "Conv2d input");
  RequireRank(weight, 4, "Conv2d weight");
  const int64_t n = x.shape()[0], cin = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const int64_t cout = weight.shape()[0], k = weight.shape()[2];
  if (weight.shape()[1] != cin || weight.shape()[3] != k) {
    throw ShapeError("Conv2d: weight " + ShapeToString(weight.shape()) + " incompatible with input " +
                     ShapeToString(x.shape()));
  }
  const int64_t ho = h + 2 * pad - k + 1, wo = w + 2 * pad - k + 1;
  if (ho < 1 || wo < 1) throw ShapeError("Conv2d: output would be empty for " + ShapeToString(x.shape()));
  const int64_t rows = cin * k * k, pos = ho * wo, cols = n * pos;

  // im2col: col[(c*k + ky)*k + kx][b*pos + oy*wo + ox]
  auto col = std::make_shared<std::vector<double>>(static_cast<size_t>(rows * cols), 0.0);
  const double* xs = x.value().raw();
  for (int64_t c = 0; c < cin; ++c) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        double* dst = col->data() + ((c * k + ky) * k + kx) * cols;
        for (int64_t b = 0; b < n; ++b) {
          const double* src = xs + (b * cin + c) * h * w;
          for (int64_t oy = 0; oy < ho; ++oy) {
            const int64_t iy = oy + ky - pad;
            double* drow = dst + b * pos + oy * wo;
            if (iy < 0 || iy >= h) continue;
            for (int64_t ox = 0; ox < wo; ++ox) {
              const int64_t ix = ox + kx - pad;
              if (ix >= 0 && ix < w) drow[ox] = src[iy * w + ix];
            }
          }
        }
      }
    }
  }
  RowMatrix out_m = ConstMatMap(weight.value().raw(), cout, rows) * ConstMatMap(col->data(), rows, cols);
  Tensor out({n, cout, ho, wo});
  for (int64_t o = 0; o < cout; ++o) {
    for (int64_t b = 0; b < n; ++b) {
      std::copy_n(out_m.data() + o * cols + b * pos, pos, out.raw() + (b * cout + o) * pos);
    }
  }
  return MakeResult(std::move(out), {x.node(), weight.node()},
                    [=](Node& self) {
                      RowMatrix g(cout, cols);
                      const double* gs = self.grad.raw();
                      for (int64_t o = 0; o < cout; ++o) {
                        for (int64_t b = 0; b < n; ++b) {
                          std::copy_n(gs + (b * cout + o) * pos, pos, g.data() + o * cols + b * pos);
                        }
                      }
                      Node& xn = *self.inputs[0];
                      Node& wn = *self.inputs[1];
                      const ConstMatMap colm(col->data(), rows, cols);
                      if (wn.requires_grad) {
                        MatMap(wn.Grad().raw(), cout, rows).noalias() += g * colm.transpose();
                      }
                      if (xn.requires_grad) {
                        RowMatrix dcol = ConstMatMap(wn.value.raw(), cout, rows).transpose() * g;
                        double* dx = xn.Grad().raw();
                        for (int64_t c = 0; c < cin; ++c) {
                          for (int64_t ky = 0; ky < k; ++ky) {
                            for (int64_t kx = 0; kx < k; ++kx) {
                              const double* src = dcol.data() + ((c * k + ky) * k + kx) * cols;
                              for (int64_t b = 0; b < n; ++b) {
                                double* dst = dx + (b * cin + c) * h * w;
                                for (int64_t oy = 0; oy < ho; ++oy) {
                                  const int64_t iy = oy + ky - pad;
                                  if (iy < 0 || iy >= h) continue;
                                  const double* srow = src + b * pos + oy * wo;
                                  for (int64_t ox = 0; ox < wo; ++ox) {
                                    const int64_t ix = ox + kx - pad;
                                    if (ix >= 0 && ix < w) dst[iy * w + ix] += srow[ox];
                                  }
                                }
                              }
                            }
                          }
                        }
                      }
                    });
}

Var SampleNorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  RequireRank(x, 4, "SampleNorm");
  const int64_t n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  if (gamma.value().size() != c || beta.value().size() != c) {
    throw ShapeError("SampleNorm: affine parameters must have " + std::to_string(c) + " entries");
  }
  const int64_t m = c * hw;
  auto xhat = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
  Tensor out(x.shape());
  for (int64_t b = 0; b < n; ++b) {
    const double* xs = x.value().raw() + b * m;
    double mean = 0.0;
    for (int64_t i = 0; i < m; ++i) mean += xs[i];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (int64_t i = 0; i < m; ++i) var += (xs[i] - mean) * (xs[i] - mean);
    var /= static_cast<double>(m);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[static_cast<size_t>(b)] = is;
    double* xh = xhat->raw() + b * m;
    double* os = out.raw() + b * m;
    for (int64_t ch = 0; ch < c; ++ch) {
      const double g = gamma.value()[ch], be = beta.value()[ch];
      for (int64_t i = ch * hw; i < (ch + 1) * hw; ++i) {
        xh[i] = (xs[i] - mean) * is;
        os[i] = g * xh[i] + be;
      }
    }
  }
  return MakeResult(std::move(out), {x.node(), gamma.node(), beta.node()},
                    [=](Node& self) {
                      Node& xn = *self.inputs[0];
                      Node& gn = *self.inputs[1];
                      Node& bn = *self.inputs[2];
                      const double* gy = self.grad.raw();
                      for (int64_t b = 0; b < n; ++b) {
                        const double* xh = xhat->raw() + b * m;
                        const double* g = gy + b * m;
                        if (gn.requires_grad || bn.requires_grad) {
                          for (int64_t ch = 0; ch < c; ++ch) {
                            double sg = 0.0, sgx = 0.0;
                            for (int64_t i = ch * hw; i < (ch + 1) * hw; ++i) {
                              sg += g[i];
                              sgx += g[i] * xh[i];
                            }
                            if (bn.requires_grad) bn.Grad()[ch] += sg;
                            if (gn.requires_grad) gn.Grad()[ch] += sgx;
                          }
                        }
                        if (xn.requires_grad) {
                          double s1 = 0.0, s2 = 0.0;
                          std::vector<double> dxh(static_cast<size_t>(m));
                          for (int64_t ch = 0; ch < c; ++ch) {
                            const double gm = gn.value[ch];
                            for (int64_t i = ch * hw; i < (ch + 1) * hw; ++i) {
                              dxh[static_cast<size_t>(i)] = g[i] * gm;
                              s1 += dxh[static_cast<size_t>(i)];
                              s2 += dxh[static_cast<size_t>(i)] * xh[i];
                            }
                          }
                          const double is = (*inv_std)[static_cast<size_t>(b)];
                          const double md = static_cast<double>(m);
                          double* dx = xn.Grad().raw() + b * m;
                          for (int64_t i = 0; i < m; ++i) {
                            dx[i] += is * (dxh[static_cast<size_t>(i)] - s1 / md - xh[i] * s2 / md);
                          }
                        }
                      }
                    });
}

Var LeakyRelu(const Var& x, double slope) {
  Tensor out = x.value();
  for (double& v : out.vec()) v = v > 0.0 ? v : slope * v;
  return MakeResult(std::move(out), {x.node()}, [slope](Node& self) {
    Node& xn = *self.inputs[0];
    Tensor& dx = xn.Grad();
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * (xn.value[i] > 0.0 ? 1.0 : slope);
  });
}

Var Sigmoid(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.vec()) v = 1.0 / (1.0 + std::exp(-v));
  return MakeResult(out, {x.node()}, [out](Node& self) {
    Tensor& dx = self.inputs[0]->Grad();
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * out[i] * (1.0 - out[i]);
  });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Add");
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return MakeResult(std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      Tensor& d = in->Grad();
      for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Mul");
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return MakeResult(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (an.requires_grad) {
      Tensor& d = an.Grad();
      for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      Tensor& d = bn.Grad();
      for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * an.value[i];
    }
  });
}

Var MaxPool2(const Var& x) {
  RequireRank(x, 4, "MaxPool2");
  const int64_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const int64_t ho = h / 2, wo = w / 2;
  if (ho < 1 || wo < 1) throw ShapeError("MaxPool2: input too small " + ShapeToString(x.shape()));
  Tensor out({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(out.size()));
  const double* xs = x.value().raw();
  int64_t o = 0;
  for (int64_t plane = 0; plane < n * c; ++plane) {
    const double* p = xs + plane * h * w;
    for (int64_t y = 0; y < ho; ++y) {
      for (int64_t xx = 0; xx < wo; ++xx, ++o) {
        int64_t best = (2 * y) * w + 2 * xx;
        for (int64_t dy = 0; dy < 2; ++dy) {
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t idx = (2 * y + dy) * w + 2 * xx + dx;
            if (p[idx] > p[best]) best = idx;
          }
        }
        out[o] = p[best];
        (*argmax)[static_cast<size_t>(o)] = plane * h * w + best;
      }
    }
  }
  return MakeResult(std::move(out), {x.node()}, [argmax](Node& self) {
    Tensor& dx = self.inputs[0]->Grad();
    for (int64_t i = 0; i < self.grad.size(); ++i) dx[(*argmax)[static_cast<size_t>(i)]] += self.grad[i];
  });
}

Var MulChannelBroadcast(const Var& x, const Var& mask) {
  RequireRank(x, 4, "MulChannelBroadcast input");
  RequireRank(mask, 4, "MulChannelBroadcast mask");
  const int64_t n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  if (mask.shape()[0] != n || mask.shape()[1] != 1 || mask.shape()[2] != x.shape()[2] ||
      mask.shape()[3] != x.shape()[3]) {
    throw ShapeError("MulChannelBroadcast: mask " + ShapeToString(mask.shape()) +
                     " does not match features " + ShapeToString(x.shape()));
  }
  Tensor out = x.value();
  for (int64_t b = 0; b < n; ++b) {
    const double* m = mask.value().raw() + b * hw;
    for (int64_t ch = 0; ch < c; ++ch) {
      double* o = out.raw() + (b * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) o[i] *= m[i];
    }
  }
  return MakeResult(std::move(out), {x.node(), mask.node()}, [=](Node& self) {
    Node& xn = *self.inputs[0];
    Node& mn = *self.inputs[1];
    for (int64_t b = 0; b < n; ++b) {
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* g = self.grad.raw() + (b * c + ch) * hw;
        if (xn.requires_grad) {
          double* dx = xn.Grad().raw() + (b * c + ch) * hw;
          const double* m = mn.value.raw() + b * hw;
          for (int64_t i = 0; i < hw; ++i) dx[i] += g[i] * m[i];
        }
        if (mn.requires_grad) {
          double* dm = mn.Grad().raw() + b * hw;
          const double* xv = xn.value.raw() + (b * c + ch) * hw;
          for (int64_t i = 0; i < hw; ++i) dm[i] += g[i] * xv[i];
        }
      }
    }
  });
}

Var ConcatChannels(const Var& a, const Var& b) {
  RequireRank(a, 4, "ConcatChannels");
  RequireRank(b, 4, "ConcatChannels");
  const int64_t n = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  const int64_t hw = a.shape()[2] * a.shape()[3];
  if (b.shape()[0] != n || b.shape()[2] != a.shape()[2] || b.shape()[3] != a.shape()[3]) {
    throw ShapeError("ConcatChannels: " + ShapeToString(a.shape()) + " vs " + ShapeToString(b.shape()));
  }
  Tensor out({n, ca + cb, a.shape()[2], a.shape()[3]});
  for (int64_t i = 0; i < n; ++i) {
    std::copy_n(a.value().raw() + i * ca * hw, ca * hw, out.raw() + i * (ca + cb) * hw);
    std::copy_n(b.value().raw() + i * cb * hw, cb * hw, out.raw() + i * (ca + cb) * hw + ca * hw);
  }
  return MakeResult(std::move(out), {a.node(), b.node()}, [=](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    for (int64_t i = 0; i < n; ++i) {
      const double* g = self.grad.raw() + i * (ca + cb) * hw;
      if (an.requires_grad) {
        double* d = an.Grad().raw() + i * ca * hw;
        for (int64_t j = 0; j < ca * hw; ++j) d[j] += g[j];
      }
      if (bn.requires_grad) {
        double* d = bn.Grad().raw() + i * cb * hw;
        for (int64_t j = 0; j < cb * hw; ++j) d[j] += g[ca * hw + j];
      }
    }
  });
}

Var ConcatBatch(std::span<const Var> parts) {
  if (parts.empty()) throw ValueError("ConcatBatch of zero tensors");
  const Shape& first = parts.front().shape();
  if (first.empty()) throw ShapeError("ConcatBatch needs rank >= 1");
  Shape inner(first.begin() + 1, first.end());
  int64_t rows = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::vector<int64_t> offsets;
  for (const Var& p : parts) {
    if (p.shape().size() != first.size() || !std::equal(inner.begin(), inner.end(), p.shape().begin() + 1)) {
      throw ShapeError("ConcatBatch: " + ShapeToString(p.shape()) + " vs " + ShapeToString(first));
    }
    offsets.push_back(rows * ShapeSize(inner));
    rows += p.shape()[0];
    inputs.push_back(p.node());
  }
  Shape shape{rows};
  shape.insert(shape.end(), inner.begin(), inner.end());
  Tensor out(shape);
  for (size_t i = 0; i < parts.size(); ++i) {
    std::copy(parts[i].value().vec().begin(), parts[i].value().vec().end(), out.raw() + offsets[i]);
  }
  return MakeResult(std::move(out), std::move(inputs), [offsets](Node& self) {
    for (size_t i = 0; i < self.inputs.size(); ++i) {
      Node& in = *self.inputs[i];
      if (!in.requires_grad) continue;
      Tensor& d = in.Grad();
      for (int64_t j = 0; j < d.size(); ++j) d[j] += self.grad[offsets[i] + j];
    }
  });
}

Var GatherBatch(const Var& x, std::span<const int> rows) {
  if (x.value().rank() < 1) throw ShapeError("GatherBatch needs rank >= 1");
  Shape shape = x.shape();
  const int64_t n = shape[0];
  const int64_t stride = n == 0 ? 0 : x.value().size() / n;
  shape[0] = static_cast<int64_t>(rows.size());
  Tensor out(shape);
  std::vector<int> idx(rows.begin(), rows.end());
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n) throw ShapeError("GatherBatch: row index out of range");
    std::copy_n(x.value().raw() + idx[r] * stride, stride, out.raw() + static_cast<int64_t>(r) * stride);
  }
  return MakeResult(std::move(out), {x.node()}, [idx, stride](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    for (size_t r = 0; r < idx.size(); ++r) {
      const double* g = self.grad.raw() + static_cast<int64_t>(r) * stride;
      double* dst = d.raw() + idx[r] * stride;
      for (int64_t j = 0; j < stride; ++j) dst[j] += g[j];
    }
  });
}

Var SegmentMean(const Var& x, std::span<const int> segment, int num_segments) {
  if (x.value().rank() < 1) throw ShapeError("SegmentMean needs rank >= 1");
  const int64_t n = x.shape()[0];
  if (static_cast<int64_t>(segment.size()) != n) {
    throw ShapeError("SegmentMean: " + std::to_string(segment.size()) + " segment ids for " +
                     std::to_string(n) + " rows");
  }
  const int64_t stride = n == 0 ? 0 : x.value().size() / n;
  std::vector<std::vector<int>> members(static_cast<size_t>(num_segments));
  for (int64_t r = 0; r < n; ++r) {
    const int s = segment[static_cast<size_t>(r)];
    if (s < 0 || s >= num_segments) throw ShapeError("SegmentMean: segment id out of range");
    members[static_cast<size_t>(s)].push_back(static_cast<int>(r));
  }
  Shape shape = x.shape();
  shape[0] = num_segments;
  Tensor out(shape);
  std::vector<double> scratch;
  for (int s = 0; s < num_segments; ++s) {
    const auto& rows = members[static_cast<size_t>(s)];
    if (rows.empty()) throw ValueError("SegmentMean: segment " + std::to_string(s) + " is empty");
    for (int64_t j = 0; j < stride; ++j) {
      scratch.clear();
      for (int r : rows) scratch.push_back(x.value()[r * stride + j]);
      out[s * stride + j] = SortedSum(scratch) / static_cast<double>(rows.size());
    }
  }
  std::vector<int> seg(segment.begin(), segment.end());
  std::vector<double> counts(static_cast<size_t>(num_segments));
  for (int s = 0; s < num_segments; ++s) counts[static_cast<size_t>(s)] = static_cast<double>(members[static_cast<size_t>(s)].size());
  return MakeResult(std::move(out), {x.node()}, [seg, counts, stride](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    for (size_t r = 0; r < seg.size(); ++r) {
      const int s = seg[r];
      const double inv = 1.0 / counts[static_cast<size_t>(s)];
      const double* g = self.grad.raw() + s * stride;
      double* dst = d.raw() + static_cast<int64_t>(r) * stride;
      for (int64_t j = 0; j < stride; ++j) dst[j] += g[j] * inv;
    }
  });
}

Var Reshape(const Var& x, Shape shape) {
  Tensor out = x.value().Reshaped(std::move(shape));
  return MakeResult(std::move(out), {x.node()}, [](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
  });
}

Var Flatten(const Var& x) {
  if (x.value().rank() < 1) throw ShapeError("Flatten needs rank >= 1");
  const int64_t n = x.shape()[0];
  return Reshape(x, {n, n == 0 ? 0 : x.value().size() / n});
}

Var GlobalAvgPool(const Var& x) {
  RequireRank(x, 4, "GlobalAvgPool");
  const int64_t n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  Tensor out({n, c});
  for (int64_t i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < hw; ++j) s += x.value()[i * hw + j];
    out[i] = s / static_cast<double>(hw);
  }
  return MakeResult(std::move(out), {x.node()}, [n, c, hw](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    for (int64_t i = 0; i < n * c; ++i) {
      const double g = self.grad[i] / static_cast<double>(hw);
      for (int64_t j = 0; j < hw; ++j) d[i * hw + j] += g;
    }
  });
}

Var MatMul(const Var& a, const Var& b) {
  RequireRank(a, 2, "MatMul");
  RequireRank(b, 2, "MatMul");
  const int64_t n = a.shape()[0], d = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != d) throw ShapeError("MatMul: " + ShapeToString(a.shape()) + " x " + ShapeToString(b.shape()));
  Tensor out({n, m});
  MatMap(out.raw(), n, m).noalias() = ConstMatMap(a.value().raw(), n, d) * ConstMatMap(b.value().raw(), d, m);
  return MakeResult(std::move(out), {a.node(), b.node()}, [n, d, m](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    const ConstMatMap g(self.grad.raw(), n, m);
    if (an.requires_grad) MatMap(an.Grad().raw(), n, d).noalias() += g * ConstMatMap(bn.value.raw(), d, m).transpose();
    if (bn.requires_grad) MatMap(bn.Grad().raw(), d, m).noalias() += ConstMatMap(an.value.raw(), n, d).transpose() * g;
  });
}

Var MatMulTransposed(const Var& a, const Var& b) {
  RequireRank(a, 2, "MatMulTransposed");
  RequireRank(b, 2, "MatMulTransposed");
  const int64_t n = a.shape()[0], d = a.shape()[1], m = b.shape()[0];
  if (b.shape()[1] != d) {
    throw ShapeError("MatMulTransposed: " + ShapeToString(a.shape()) + " x " + ShapeToString(b.shape()) + "^T");
  }
  Tensor out({n, m});
  MatMap(out.raw(), n, m).noalias() =
      ConstMatMap(a.value().raw(), n, d) * ConstMatMap(b.value().raw(), m, d).transpose();
  return MakeResult(std::move(out), {a.node(), b.node()}, [n, d, m](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    const ConstMatMap g(self.grad.raw(), n, m);
    if (an.requires_grad) MatMap(an.Grad().raw(), n, d).noalias() += g * ConstMatMap(bn.value.raw(), m, d);
    if (bn.requires_grad) MatMap(bn.Grad().raw(), m, d).noalias() += g.transpose() * ConstMatMap(an.value.raw(), n, d);
  });
}

Var AddBias(const Var& x, const Var& bias) {
  RequireRank(x, 2, "AddBias");
  const int64_t n = x.shape()[0], m = x.shape()[1];
  if (bias.value().size() != m) throw ShapeError("AddBias: bias size mismatch");
  Tensor out = x.value();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < m; ++j) out[i * m + j] += bias.value()[j];
  }
  return MakeResult(std::move(out), {x.node(), bias.node()}, [n, m](Node& self) {
    Node& xn = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (xn.requires_grad) {
      Tensor& d = xn.Grad();
      for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
    if (bn.requires_grad) {
      Tensor& d = bn.Grad();
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < m; ++j) d[j] += self.grad[i * m + j];
      }
    }
  });
}

Var L2NormalizeRows(const Var& x) {
  RequireRank(x, 2, "L2NormalizeRows");
  const int64_t n = x.shape()[0], d = x.shape()[1];
  Tensor out = x.value();
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += out[i * d + j] * out[i * d + j];
    const double nr = std::sqrt(s);
    if (!(nr > 0.0)) throw ValueError("cannot normalise a zero-norm feature vector");
    (*norms)[static_cast<size_t>(i)] = nr;
    for (int64_t j = 0; j < d; ++j) out[i * d + j] /= nr;
  }
  Tensor y = out;
  return MakeResult(std::move(out), {x.node()}, [y, norms, n, d](Node& self) {
    Tensor& dx = self.inputs[0]->Grad();
    for (int64_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < d; ++j) dot += self.grad[i * d + j] * y[i * d + j];
      const double inv = 1.0 / (*norms)[static_cast<size_t>(i)];
      for (int64_t j = 0; j < d; ++j) dx[i * d + j] += inv * (self.grad[i * d + j] - y[i * d + j] * dot);
    }
  });
}

Var ScaleBy(const Var& x, const Var& s) {
  if (s.value().size() != 1) throw ShapeError("ScaleBy: scale must hold one element");
  const double sv = s.value()[0];
  Tensor out = x.value();
  for (double& v : out.vec()) v *= sv;
  return MakeResult(std::move(out), {x.node(), s.node()}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Node& sn = *self.inputs[1];
    const double sv = sn.value[0];
    if (xn.requires_grad) {
      Tensor& d = xn.Grad();
      for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * sv;
    }
    if (sn.requires_grad) {
      double acc = 0.0;
      for (int64_t i = 0; i < xn.value.size(); ++i) acc += self.grad[i] * xn.value[i];
      sn.Grad()[0] += acc;
    }
  });
}

Tensor Softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("Softmax expects (N, M), got " + ShapeToString(logits.shape()));
  const int64_t n = logits.dim(0), m = logits.dim(1);
  Tensor p = logits;
  for (int64_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < m; ++j) mx = std::max(mx, p[i * m + j]);
    double s = 0.0;
    for (int64_t j = 0; j < m; ++j) {
      p[i * m + j] = std::exp(p[i * m + j] - mx);
      s += p[i * m + j];
    }
    for (int64_t j = 0; j < m; ++j) p[i * m + j] /= s;
  }
  return p;
}

Var SoftmaxCrossEntropy(const Var& logits, std::span<const int> labels) {
  RequireRank(logits, 2, "SoftmaxCrossEntropy");
  const int64_t n = logits.shape()[0], m = logits.shape()[1];
  if (static_cast<int64_t>(labels.size()) != n) {
    throw ValueError("SoftmaxCrossEntropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  if (n == 0) throw ValueError("SoftmaxCrossEntropy on an empty batch");
  for (int l : labels) {
    if (l < 0 || l >= m) throw ValueError("label " + std::to_string(l) + " outside [0, " + std::to_string(m) + ")");
  }
  Tensor p = Softmax(logits.value());
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    // log-sum-exp directly, so large logits stay finite.
    const double* z = logits.value().raw() + i * m;
    double mx = z[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, z[j]);
    double s = 0.0;
    for (int64_t j = 0; j < m; ++j) s += std::exp(z[j] - mx);
    loss += (mx + std::log(s)) - z[labels[static_cast<size_t>(i)]];
  }
  loss /= static_cast<double>(n);
  std::vector<int> lab(labels.begin(), labels.end());
  return MakeResult(Tensor({1}, {loss}), {logits.node()}, [p, lab, n, m](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    const double g = self.grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < m; ++j) {
        d[i * m + j] += g * (p[i * m + j] - (j == lab[static_cast<size_t>(i)] ? 1.0 : 0.0));
      }
    }
  });
}

Var Sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return MakeResult(Tensor({1}, {s}), {x.node()}, [](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[0];
  });
}

Var Mean(const Var& x) {
  if (x.value().size() == 0) throw ValueError("Mean of an empty tensor");
  const double inv = 1.0 / static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return MakeResult(Tensor({1}, {s * inv}), {x.node()}, [inv](Node& self) {
    Tensor& d = self.inputs[0]->Grad();
    for (int64_t i = 0; i < d.size(); ++i) d[i] += self.grad[0] * inv;
  });
}

Var Dropout(const Var& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ValueError("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor scale(x.shape());
  for (double& s : scale.vec()) s = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return Mul(x, Var(std::move(scale)));
}

}  // namespace pseudoshot::nn
