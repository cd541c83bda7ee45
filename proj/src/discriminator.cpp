// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/discriminator.hpp"

#include <cmath>
#include <sstream>

#include "gas/common.hpp"
#include "gas/kv_file.hpp"
#include "gas/parallel.hpp"

namespace gas {
namespace {

constexpr double kSigmaFloor = 1e-12;
// Counter-space stride separating per-layer noise blocks within one call.
constexpr uint64_t kLayerCounterStride = 1ull << 40;

int out_size(int in, int k, int stride) { return (in - k) / stride + 1; }

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void spectral_normalize(ConvLayer& layer, bool update_u) {
  const size_t rows = static_cast<size_t>(layer.out_ch);
  const size_t cols = layer.w.size() / rows;
  if (layer.sn_u.size() != rows)
    fail(ErrorKind::shape, "spectral norm: u size mismatch");
  // v = normalize(W^T u)
  std::vector<double> v(cols, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const double u = layer.sn_u[r];
    const double* wr = layer.w.data() + r * cols;
    for (size_t c = 0; c < cols; ++c) v[c] += wr[c] * u;
  }
  double vn = vec_norm(v);
  double sigma = 0.0;
  if (vn > 0.0) {
    for (double& x : v) x /= vn;
    // Wv, reused both for the u update and the sigma estimate
    std::vector<double> wv(rows, 0.0);
    for (size_t r = 0; r < rows; ++r) {
      const double* wr = layer.w.data() + r * cols;
      double s = 0.0;
      for (size_t c = 0; c < cols; ++c) s += wr[c] * v[c];
      wv[r] = s;
    }
    if (update_u) {
      double wn = vec_norm(wv);
      if (wn > 0.0)
        for (size_t r = 0; r < rows; ++r) layer.sn_u[r] = wv[r] / wn;
    }
    for (size_t r = 0; r < rows; ++r) sigma += layer.sn_u[r] * wv[r];
  }
  layer.sn_sigma = std::max(sigma, kSigmaFloor);
  layer.w_norm.resize(layer.w.size());
  const double inv = 1.0 / layer.sn_sigma;
  for (size_t i = 0; i < layer.w.size(); ++i)
    layer.w_norm[i] = layer.w[i] * inv;
}

namespace {

void conv_fwd(const ImageBuf& in, const ConvLayer& l, ImageBuf& out) {
  const int iw = in.width, ih = in.height;
  const int ow = out.width, oh = out.height;
  const int k = l.k, s = l.stride;
  parallel_for(0, l.out_ch, [&](long o) {
    const double* wo = l.w_norm.data() +
                       static_cast<size_t>(o) * l.in_ch * k * k;
    double* op = out.plane(static_cast<int>(o));
    const double bias = l.b[static_cast<size_t>(o)];
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) op[oy * ow + ox] = bias;
    for (int i = 0; i < l.in_ch; ++i) {
      const double* ip = in.plane(i);
      const double* wi = wo + static_cast<size_t>(i) * k * k;
      for (int oy = 0; oy < oh; ++oy) {
        double* orow = op + static_cast<size_t>(oy) * ow;
        for (int ky = 0; ky < k; ++ky) {
          const double* irow = ip + static_cast<size_t>(oy * s + ky) * iw;
          const double* wrow = wi + ky * k;
          for (int ox = 0; ox < ow; ++ox) {
            const double* px = irow + ox * s;
            double acc = 0.0;
            for (int kx = 0; kx < k; ++kx) acc += wrow[kx] * px[kx];
            orow[ox] += acc;
          }
        }
      }
    }
  });
  (void)ih;
}

void add_noise(ImageBuf& x, double sigma, const CounterRng& rng,
               uint64_t counter_base) {
  if (sigma <= 0.0) return;
  for (size_t i = 0; i < x.data.size(); ++i)
    x.data[i] += sigma * rng.normal_at(counter_base + i);
}

}  // namespace

ImageBuf disc_fwd(const ImageBuf& img, const DiscriminatorNet& net,
                  const CounterRng& rng, bool train_mode, DiscTape* tape) {
  if (net.layers.empty()) fail(ErrorKind::contract, "empty discriminator");
  int rf = receptive_field(net);
  if (img.width < rf || img.height < rf)
    fail(ErrorKind::shape, "discriminator input smaller than receptive field");
  if (tape) {
    tape->inputs.clear();
    tape->preact.clear();
    tape->used = false;
  }
  ImageBuf x = img;
  for (size_t li = 0; li < net.layers.size(); ++li) {
    const ConvLayer& l = net.layers[li];
    if (x.channels != l.in_ch)
      fail(ErrorKind::shape, "discriminator channel mismatch");
    if (train_mode)
      add_noise(x, net.instance_noise_sigma, rng, li * kLayerCounterStride);
    int ow = out_size(x.width, l.k, l.stride);
    int oh = out_size(x.height, l.k, l.stride);
    if (ow <= 0 || oh <= 0)
      fail(ErrorKind::shape, "discriminator input too small");
    ImageBuf pre(ow, oh, l.out_ch, x.space);
    conv_fwd(x, l, pre);
    if (tape) tape->inputs.push_back(std::move(x));
    if (l.linear_output) {
      x = pre;
    } else {
      x = ImageBuf(ow, oh, l.out_ch, pre.space);
      const double slope = l.leaky_slope;
      for (size_t i = 0; i < pre.data.size(); ++i) {
        double v = pre.data[i];
        x.data[i] = v > 0.0 ? v : slope * v;
      }
    }
    if (tape) tape->preact.push_back(std::move(pre));
  }
  return x;
}

void disc_bwd(const ImageBuf& grad_logits, const DiscriminatorNet& net,
              DiscTape& tape, DiscGrads* grad_params, ImageBuf* grad_input) {
  if (tape.used) fail(ErrorKind::contract, "discriminator: tape reused");
  tape.used = true;
  const int L = static_cast<int>(net.layers.size());
  ImageBuf g = grad_logits;
  for (int li = L - 1; li >= 0; --li) {
    const ConvLayer& l = net.layers[li];
    const ImageBuf& pre = tape.preact[li];
    const ImageBuf& in = tape.inputs[li];
    if (!l.linear_output) {
      const double slope = l.leaky_slope;
      for (size_t i = 0; i < g.data.size(); ++i)
        if (pre.data[i] <= 0.0) g.data[i] *= slope;
    }
    const int k = l.k, s = l.stride;
    const int ow = pre.width, oh = pre.height, iw = in.width;
    if (grad_params) {
      DiscGrads::Layer& gl = (*grad_params).layers[li];
      parallel_for(0, l.out_ch, [&](long o) {
        const double* gp = g.plane(static_cast<int>(o));
        double* gwo = gl.w.data() + static_cast<size_t>(o) * l.in_ch * k * k;
        double gb = 0.0;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) gb += gp[oy * ow + ox];
        gl.b[static_cast<size_t>(o)] += gb;
        for (int i = 0; i < l.in_ch; ++i) {
          const double* ip = in.plane(i);
          double* gwi = gwo + static_cast<size_t>(i) * k * k;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              double acc = 0.0;
              for (int oy = 0; oy < oh; ++oy) {
                const double* grow = gp + static_cast<size_t>(oy) * ow;
                const double* irow =
                    ip + static_cast<size_t>(oy * s + ky) * iw + kx;
                for (int ox = 0; ox < ow; ++ox)
                  acc += grow[ox] * irow[ox * s];
              }
              // chain through w_norm = w / sigma (sigma detached)
              gwi[ky * k + kx] += acc / l.sn_sigma;
            }
        }
      });
    }
    const bool need_in = grad_input || li > 0;
    if (need_in) {
      ImageBuf gi(in.width, in.height, in.channels, in.space);
      parallel_for(0, l.in_ch, [&](long i) {
        double* gip = gi.plane(static_cast<int>(i));
        for (int o = 0; o < l.out_ch; ++o) {
          const double* gp = g.plane(o);
          const double* wi = l.w_norm.data() +
                             (static_cast<size_t>(o) * l.in_ch + i) * k * k;
          for (int oy = 0; oy < oh; ++oy) {
            const double* grow = gp + static_cast<size_t>(oy) * ow;
            for (int ky = 0; ky < k; ++ky) {
              double* girow = gip + static_cast<size_t>(oy * s + ky) * iw;
              const double* wrow = wi + ky * k;
              for (int ox = 0; ox < ow; ++ox) {
                const double gv = grow[ox];
                double* px = girow + ox * s;
                for (int kx = 0; kx < k; ++kx) px[kx] += wrow[kx] * gv;
              }
            }
          }
        }
      });
      g = std::move(gi);
    }
  }
  if (grad_input) *grad_input = std::move(g);
}

DiscriminatorNet make_patch_discriminator(uint64_t seed) {
  struct Spec {
    int in, out, stride;
    bool linear;
  };
  const Spec specs[4] = {
      {3, 64, 2, false}, {64, 128, 2, false}, {128, 256, 2, false},
      {256, 1, 1, true}};
  DiscriminatorNet net;
  for (int li = 0; li < 4; ++li) {
    ConvLayer l;
    l.in_ch = specs[li].in;
    l.out_ch = specs[li].out;
    l.k = 4;
    l.stride = specs[li].stride;
    l.leaky_slope = 0.2;
    l.linear_output = specs[li].linear;
    l.w.resize(static_cast<size_t>(l.out_ch) * l.in_ch * l.k * l.k);
    l.b.assign(static_cast<size_t>(l.out_ch), 0.0);
    CounterRng rng(seed, 0x5000 + static_cast<uint64_t>(li));
    for (size_t i = 0; i < l.w.size(); ++i)
      l.w[i] = 0.02 * rng.normal_at(i);
    l.sn_u.resize(static_cast<size_t>(l.out_ch));
    for (size_t i = 0; i < l.sn_u.size(); ++i)
      l.sn_u[i] = rng.normal_at(l.w.size() + i);
    double un = vec_norm(l.sn_u);
    for (double& u : l.sn_u) u /= un;
    spectral_normalize(l, false);
    net.layers.push_back(std::move(l));
  }
  return net;
}

DiscGrads make_grads_like(const DiscriminatorNet& net) {
  DiscGrads g;
  for (const ConvLayer& l : net.layers) {
    DiscGrads::Layer gl;
    gl.w.assign(l.w.size(), 0.0);
    gl.b.assign(l.b.size(), 0.0);
    g.layers.push_back(std::move(gl));
  }
  return g;
}

int receptive_field(const DiscriminatorNet& net) {
  int rf = 1, jump = 1;
  for (const ConvLayer& l : net.layers) {
    rf += (l.k - 1) * jump;
    jump *= l.stride;
  }
  return rf;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_f64(v[i]);
  }
  return s;
}

std::vector<double> split_doubles(const std::string& s, size_t expect,
                                  const std::string& what) {
  std::vector<double> v;
  v.reserve(expect);
  std::istringstream in(s);
  double x;
  while (in >> x) v.push_back(x);
  if (v.size() != expect)
    fail(ErrorKind::parse, "bad vector size for " + what);
  return v;
}

}  // namespace

void save_discriminator(const DiscriminatorNet& net, const std::string& path) {
  KvDoc doc;
  doc.set_i64("format_version", 1);
  doc.set_i64("num_layers", static_cast<int64_t>(net.layers.size()));
  for (size_t li = 0; li < net.layers.size(); ++li) {
    const ConvLayer& l = net.layers[li];
    std::string base = "layer" + std::to_string(li) + ".";
    doc.set_i64(base + "in_ch", l.in_ch);
    doc.set_i64(base + "out_ch", l.out_ch);
    doc.set_i64(base + "k", l.k);
    doc.set_i64(base + "stride", l.stride);
    doc.set_f64(base + "leaky_slope", l.leaky_slope);
    doc.set_i64(base + "linear_output", l.linear_output ? 1 : 0);
    doc.set(base + "w", join_doubles(l.w));
    doc.set(base + "b", join_doubles(l.b));
    doc.set(base + "sn_u", join_doubles(l.sn_u));
  }
  doc.save(path);
}

DiscriminatorNet load_discriminator(const std::string& path) {
  KvDoc doc = KvDoc::load(path);
  if (doc.get_i64("format_version") != 1)
    fail(ErrorKind::parse, path + ": schema version mismatch");
  DiscriminatorNet net;
  int64_t n = doc.get_i64("num_layers");
  for (int64_t li = 0; li < n; ++li) {
    std::string base = "layer" + std::to_string(li) + ".";
    ConvLayer l;
    l.in_ch = static_cast<int>(doc.get_i64(base + "in_ch"));
    l.out_ch = static_cast<int>(doc.get_i64(base + "out_ch"));
    l.k = static_cast<int>(doc.get_i64(base + "k"));
    l.stride = static_cast<int>(doc.get_i64(base + "stride"));
    l.leaky_slope = doc.get_f64(base + "leaky_slope");
    l.linear_output = doc.get_i64(base + "linear_output") != 0;
    size_t wn = static_cast<size_t>(l.out_ch) * l.in_ch * l.k * l.k;
    l.w = split_doubles(doc.get(base + "w"), wn, base + "w");
    l.b = split_doubles(doc.get(base + "b"), l.out_ch, base + "b");
    l.sn_u = split_doubles(doc.get(base + "sn_u"), l.out_ch, base + "sn_u");
    spectral_normalize(l, false);
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace gas
