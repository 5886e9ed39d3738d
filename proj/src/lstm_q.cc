// Copyright 2026 The pegrl Authors.
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

#include "pegrl/lstm_q.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pegrl {
namespace {

constexpr char kWeightsMagic[4] = {'P', 'G', 'H', 'W'};
constexpr uint32_t kWeightsVersion = 1;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations of one layer at every step of a sequence.
struct LayerTrace {
  int steps = 0;
  int cols = 0;
  int hidden = 0;
  std::vector<double> xh;     // steps x cols
  std::vector<double> gates;  // steps x 4H, post-activation
  std::vector<double> c;      // steps x H
  std::vector<double> tc;     // steps x H, tanh(c)
  std::vector<double> h;      // steps x H

  LayerTrace(int t, const LayerLayout& l)
      : steps(t), cols(l.cols()), hidden(l.hidden),
        xh(static_cast<size_t>(t) * l.cols()),
        gates(static_cast<size_t>(t) * 4 * l.hidden),
        c(static_cast<size_t>(t) * l.hidden),
        tc(static_cast<size_t>(t) * l.hidden),
        h(static_cast<size_t>(t) * l.hidden) {}

  const double* h_at(int t) const { return h.data() + static_cast<size_t>(t) * hidden; }
};

// One LSTM step. `xh` holds [x; h_prev]; writes gates, c, tanh(c) and h.
void CellForward(const double* p, const LayerLayout& l, const double* xh,
                 const double* c_prev, double* gates, double* c, double* tc, double* h) {
  const int H = l.hidden;
  const int cols = l.cols();
  const double* w = p + l.weights;
  const double* b = p + l.bias;
  double z[4];
  for (int j = 0; j < H; ++j) {
    const double* rows[4];
    for (int g = 0; g < 4; ++g) {
      rows[g] = w + static_cast<size_t>(g * H + j) * cols;
      z[g] = 0.0;
    }
    for (int k = 0; k < cols; ++k) {
      for (int g = 0; g < 4; ++g) z[g] += rows[g][k] * xh[k];
    }
    for (int g = 0; g < 4; ++g) {
      double v = z[g] + b[g * H + j];
      gates[g * H + j] = g == 2 ? std::tanh(v) : Sigmoid(v);
    }
  }
  for (int j = 0; j < H; ++j) {
    double i = gates[j], f = gates[H + j], g = gates[2 * H + j], o = gates[3 * H + j];
    c[j] = f * c_prev[j] + i * g;
    tc[j] = std::tanh(c[j]);
    h[j] = o * tc[j];
  }
}

void RunLayer(const double* p, const LayerLayout& l,
              const std::vector<double>& inputs, LayerTrace& trace) {
  const int H = l.hidden;
  std::vector<double> zero(H, 0.0);
  for (int t = 0; t < trace.steps; ++t) {
    double* xh = trace.xh.data() + static_cast<size_t>(t) * l.cols();
    std::copy_n(inputs.data() + static_cast<size_t>(t) * l.in, l.in, xh);
    const double* h_prev = t > 0 ? trace.h_at(t - 1) : zero.data();
    const double* c_prev = t > 0 ? trace.c.data() + static_cast<size_t>(t - 1) * H : zero.data();
    std::copy_n(h_prev, H, xh + l.in);
    CellForward(p, l, xh, c_prev, trace.gates.data() + static_cast<size_t>(t) * 4 * H,
                trace.c.data() + static_cast<size_t>(t) * H,
                trace.tc.data() + static_cast<size_t>(t) * H,
                trace.h.data() + static_cast<size_t>(t) * H);
  }
}

// Backpropagates per-step hidden gradients `dh_ext` through the layer,
// accumulating parameter gradients into `grad` and writing input gradients
// into `dx` (steps x in) when non-null.
void LayerBackward(const double* p, const LayerLayout& l,
                   const LayerTrace& tr, const std::vector<double>& dh_ext,
                   std::span<double> grad, std::vector<double>* dx) {
  const int H = l.hidden;
  const int cols = l.cols();
  const double* w = p + l.weights;
  double* gw = grad.data() + l.weights;
  double* gb = grad.data() + l.bias;
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H), dxh(cols);
  for (int t = tr.steps - 1; t >= 0; --t) {
    const double* gates = tr.gates.data() + static_cast<size_t>(t) * 4 * H;
    const double* tc = tr.tc.data() + static_cast<size_t>(t) * H;
    for (int j = 0; j < H; ++j) {
      double i = gates[j], f = gates[H + j], g = gates[2 * H + j], o = gates[3 * H + j];
      double c_prev = t > 0 ? tr.c[static_cast<size_t>(t - 1) * H + j] : 0.0;
      double dh = dh_ext[static_cast<size_t>(t) * H + j] + dh_next[j];
      double d_o = dh * tc[j];
      double dc = dh * o * (1.0 - tc[j] * tc[j]) + dc_next[j];
      dc_next[j] = dc * f;
      dz[j] = dc * g * i * (1.0 - i);
      dz[H + j] = dc * c_prev * f * (1.0 - f);
      dz[2 * H + j] = dc * i * (1.0 - g * g);
      dz[3 * H + j] = d_o * o * (1.0 - o);
    }
    const double* xh = tr.xh.data() + static_cast<size_t>(t) * cols;
    std::fill(dxh.begin(), dxh.end(), 0.0);
    for (int r = 0; r < 4 * H; ++r) {
      double d = dz[r];
      if (d == 0.0) continue;
      gb[r] += d;
      double* grow = gw + static_cast<size_t>(r) * cols;
      const double* row = w + static_cast<size_t>(r) * cols;
      for (int k = 0; k < cols; ++k) {
        grow[k] += d * xh[k];
        dxh[k] += d * row[k];
      }
    }
    if (dx != nullptr) {
      std::copy_n(dxh.data(), l.in, dx->data() + static_cast<size_t>(t) * l.in);
    }
    std::copy_n(dxh.data() + l.in, H, dh_next.data());
  }
}

std::vector<double> ScaledInputs(const QNetwork& net, std::span<const StateVector> seq) {
  const int in = net.shape().input;
  if (in != kStateDim) throw DomainError("network input dimension must be 7");
  std::vector<double> x(seq.size() * in);
  auto scale = net.input_scale();
  for (size_t t = 0; t < seq.size(); ++t) {
    for (int k = 0; k < in; ++k) x[t * in + k] = seq[t][k] * scale[k];
  }
  return x;
}

std::vector<double> Head(const QNetwork& net, const double* h2) {
  const auto p = net.params();
  const int A = net.shape().actions;
  const int H = net.shape().h2;
  std::vector<double> q(A);
  for (int a = 0; a < A; ++a) {
    double s = p[net.head_bias() + a];
    const double* row = p.data() + net.head_weights() + static_cast<size_t>(a) * H;
    for (int k = 0; k < H; ++k) s += row[k] * h2[k];
    q[a] = s;
  }
  return q;
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void PutU64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
uint64_t GetLE(std::span<const uint8_t> b, size_t off, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(b[off + i]) << (8 * i);
  return v;
}

}  // namespace

QNetwork::QNetwork(const LstmShape& shape) : shape_(shape) {
  if (shape.input <= 0 || shape.h1 <= 0 || shape.h2 <= 0 || shape.actions <= 0) {
    throw DomainError("network dimensions must be positive");
  }
  size_t off = 0;
  layer1_ = {shape.input, shape.h1, 0, 0};
  layer1_.weights = off;
  off += static_cast<size_t>(4 * shape.h1) * layer1_.cols();
  layer1_.bias = off;
  off += 4 * shape.h1;
  layer2_ = {shape.h1, shape.h2, 0, 0};
  layer2_.weights = off;
  off += static_cast<size_t>(4 * shape.h2) * layer2_.cols();
  layer2_.bias = off;
  off += 4 * shape.h2;
  head_w_ = off;
  off += static_cast<size_t>(shape.actions) * shape.h2;
  head_b_ = off;
  off += shape.actions;
  params_.assign(off, 0.0);
  input_scale_.assign(shape.input, 1.0);
}

QNetwork QNetwork::Initialized(const LstmShape& shape, Rng& rng) {
  QNetwork net(shape);
  auto fill = [&](size_t begin, size_t count, int fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (size_t i = 0; i < count; ++i) net.params_[begin + i] = u(rng);
  };
  for (const LayerLayout* l : {&net.layer1_, &net.layer2_}) {
    fill(l->weights, static_cast<size_t>(4 * l->hidden) * l->cols(), l->cols());
    for (int j = 0; j < l->hidden; ++j) net.params_[l->bias + l->hidden + j] = 1.0;
  }
  fill(net.head_w_, static_cast<size_t>(shape.actions) * shape.h2, shape.h2);
  return net;
}

void QNetwork::set_input_scale(std::span<const double> scale) {
  if (scale.size() != input_scale_.size()) throw DomainError("input scale size mismatch");
  input_scale_.assign(scale.begin(), scale.end());
}

bool QNetwork::operator==(const QNetwork& other) const {
  return shape_ == other.shape_ && params_ == other.params_ &&
         input_scale_ == other.input_scale_;
}

RecurrentState RecurrentState::Zero(const LstmShape& shape) {
  RecurrentState s;
  s.h1.assign(shape.h1, 0.0);
  s.c1.assign(shape.h1, 0.0);
  s.h2.assign(shape.h2, 0.0);
  s.c2.assign(shape.h2, 0.0);
  return s;
}

ForwardResult Forward(const QNetwork& net, std::span<const StateVector> sequence) {
  if (sequence.empty()) throw DomainError("Forward: empty sequence");
  const int T = static_cast<int>(sequence.size());
  const LstmShape& s = net.shape();
  const double* p = net.params().data();
  LayerTrace t1(T, net.layer1()), t2(T, net.layer2());
  RunLayer(p, net.layer1(), ScaledInputs(net, sequence), t1);
  RunLayer(p, net.layer2(), t1.h, t2);
  ForwardResult out;
  out.q = Head(net, t2.h_at(T - 1));
  auto last = [](const std::vector<double>& v, int H) {
    return std::vector<double>(v.end() - H, v.end());
  };
  out.state.h1 = last(t1.h, s.h1);
  out.state.c1 = last(t1.c, s.h1);
  out.state.h2 = last(t2.h, s.h2);
  out.state.c2 = last(t2.c, s.h2);
  return out;
}

std::vector<double> StepForward(const QNetwork& net, RecurrentState& state,
                                const StateVector& input) {
  const LstmShape& s = net.shape();
  if (s.input != kStateDim) throw DomainError("network input dimension must be 7");
  const double* p = net.params().data();
  auto step = [&](const LayerLayout& l, const double* x, std::vector<double>& h,
                  std::vector<double>& c) {
    std::vector<double> xh(l.cols()), gates(4 * l.hidden), c_new(l.hidden),
        tc(l.hidden), h_new(l.hidden);
    std::copy_n(x, l.in, xh.data());
    std::copy(h.begin(), h.end(), xh.begin() + l.in);
    CellForward(p, l, xh.data(), c.data(), gates.data(), c_new.data(), tc.data(),
                h_new.data());
    h = std::move(h_new);
    c = std::move(c_new);
  };
  StateVector x;
  for (int k = 0; k < kStateDim; ++k) x[k] = input[k] * net.input_scale()[k];
  step(net.layer1(), x.data(), state.h1, state.c1);
  step(net.layer2(), state.h1.data(), state.h2, state.c2);
  return Head(net, state.h2.data());
}

std::vector<double> QGradient(const QNetwork& net, std::span<const StateVector> sequence,
                              int action, std::span<double> grad) {
  if (sequence.empty()) throw DomainError("QGradient: empty sequence");
  if (action < 0 || action >= net.shape().actions) {
    throw DomainError("QGradient: action index out of range");
  }
  if (grad.size() != net.num_params()) throw DomainError("QGradient: gradient size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const int T = static_cast<int>(sequence.size());
  const LstmShape& s = net.shape();
  const double* p = net.params().data();

  LayerTrace t1(T, net.layer1()), t2(T, net.layer2());
  RunLayer(p, net.layer1(), ScaledInputs(net, sequence), t1);
  RunLayer(p, net.layer2(), t1.h, t2);
  const double* h_last = t2.h_at(T - 1);
  std::vector<double> q = Head(net, h_last);

  // Head: dQ_a/dW[a,:] = h2, dQ_a/db[a] = 1, dQ_a/dh2 = W[a,:].
  grad[net.head_bias() + action] = 1.0;
  std::vector<double> dh2(static_cast<size_t>(T) * s.h2, 0.0);
  const double* wrow = p + net.head_weights() + static_cast<size_t>(action) * s.h2;
  for (int k = 0; k < s.h2; ++k) {
    grad[net.head_weights() + static_cast<size_t>(action) * s.h2 + k] = h_last[k];
    dh2[static_cast<size_t>(T - 1) * s.h2 + k] = wrow[k];
  }
  std::vector<double> dh1(static_cast<size_t>(T) * s.h1, 0.0);
  LayerBackward(p, net.layer2(), t2, dh2, grad, &dh1);
  LayerBackward(p, net.layer1(), t1, dh1, grad, nullptr);
  return q;
}

double TdTarget(double reward, std::span<const double> q_next, double gamma, bool terminal) {
  if (terminal) return reward;
  if (q_next.empty()) throw DomainError("TdTarget: no next-state values");
  return reward + gamma * *std::max_element(q_next.begin(), q_next.end());
}

int GreedyAction(std::span<const double> q) {
  if (q.empty()) throw DomainError("GreedyAction: empty values");
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

double ApplyGradient(QNetwork& net, std::span<const double> grad, double alpha,
                     double clip_norm) {
  if (grad.size() != net.num_params()) throw DomainError("ApplyGradient: size mismatch");
  if (!(alpha > 0.0)) throw DomainError("ApplyGradient: alpha must be positive");
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    size_t bad = 0;
    while (bad < grad.size() && std::isfinite(grad[bad])) ++bad;
    std::ostringstream msg;
    msg << "non-finite gradient (norm " << norm << ", first bad parameter " << bad
        << " of " << grad.size() << ")";
    throw TrainingError(msg.str());
  }
  double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  auto p = net.params();
  for (size_t i = 0; i < p.size(); ++i) p[i] -= alpha * scale * grad[i];
  return norm;
}

UpdateStats BackwardUpdate(QNetwork& net, std::span<const StateVector> sequence,
                           int action, double target, double alpha, double clip_norm) {
  std::vector<double> grad(net.num_params());
  std::vector<double> q = QGradient(net, sequence, action, grad);
  UpdateStats stats;
  stats.q = q[action];
  stats.td_error = target - stats.q;
  // dL/dtheta = -(target - Q) dQ/dtheta.
  for (double& g : grad) g *= -stats.td_error;
  stats.grad_norm = ApplyGradient(net, grad, alpha, clip_norm);
  return stats;
}

std::vector<uint8_t> SerializeWeights(const QNetwork& net) {
  std::vector<uint8_t> out(kWeightsMagic, kWeightsMagic + 4);
  const LstmShape& s = net.shape();
  PutU32(out, kWeightsVersion);
  PutU32(out, static_cast<uint32_t>(s.input));
  PutU32(out, static_cast<uint32_t>(s.h1));
  PutU32(out, static_cast<uint32_t>(s.h2));
  PutU32(out, static_cast<uint32_t>(s.actions));
  PutU64(out, net.num_params());
  for (double v : net.input_scale()) PutU64(out, std::bit_cast<uint64_t>(v));
  for (double v : net.params()) PutU64(out, std::bit_cast<uint64_t>(v));
  return out;
}

QNetwork DeserializeWeights(std::span<const uint8_t> bytes) {
  constexpr size_t kHeader = 4 + 5 * 4 + 8;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) {
    throw DomainError("not a weight file");
  }
  if (GetLE(bytes, 4, 4) != kWeightsVersion) throw DomainError("unsupported weight file version");
  LstmShape s;
  s.input = static_cast<int>(GetLE(bytes, 8, 4));
  s.h1 = static_cast<int>(GetLE(bytes, 12, 4));
  s.h2 = static_cast<int>(GetLE(bytes, 16, 4));
  s.actions = static_cast<int>(GetLE(bytes, 20, 4));
  uint64_t count = GetLE(bytes, 24, 8);
  QNetwork net(s);
  if (count != net.num_params()) throw DomainError("weight file parameter count mismatch");
  if (bytes.size() != kHeader + 8 * (s.input + count)) {
    throw DomainError("weight file has the wrong size");
  }
  size_t off = kHeader;
  std::vector<double> scale(s.input);
  for (double& v : scale) {
    v = std::bit_cast<double>(GetLE(bytes, off, 8));
    off += 8;
  }
  net.set_input_scale(scale);
  for (double& v : net.params()) {
    v = std::bit_cast<double>(GetLE(bytes, off, 8));
    off += 8;
  }
  return net;
}

void SaveWeights(const QNetwork& net, const std::string& path) {
  std::vector<uint8_t> bytes = SerializeWeights(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

QNetwork LoadWeights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return DeserializeWeights(bytes);
}

}  // namespace pegrl
