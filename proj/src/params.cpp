// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/params.hpp"

#include <cmath>
#include <limits>

#include "gas/common.hpp"
#include "gas/kv_file.hpp"

namespace gas {
namespace {

constexpr int kFormatVersion = 1;

template <typename P, typename D>
std::array<D, kParamCount> view(P& p) {
  std::array<D, kParamCount> v;
  int i = 0;
  for (int j = 0; j < 5; ++j) v[i++] = &p.lens.kx[j];
  for (int j = 0; j < 5; ++j) v[i++] = &p.lens.ky[j];
  for (int j = 0; j < 9; ++j) v[i++] = &p.color.m[j];
  for (int j = 0; j < 3; ++j) v[i++] = &p.color.t[j];
  for (int l = 0; l < 4; ++l) {
    v[i++] = &p.bloom_levels[l].a;
    v[i++] = &p.bloom_levels[l].b_raw;
    v[i++] = &p.bloom_levels[l].logvar_x;
    v[i++] = &p.bloom_levels[l].logvar_y;
  }
  v[i++] = &p.bloom_tone.eps_raw;
  v[i++] = &p.bloom_tone.s_raw;
  v[i++] = &p.noise.gamma_raw;
  v[i++] = &p.noise.sigma_raw;
  return v;
}

}  // namespace

std::array<double*, kParamCount> param_ptrs(PipelineParams& p) {
  return view<PipelineParams, double*>(p);
}

std::array<const double*, kParamCount> param_ptrs(const PipelineParams& p) {
  return view<const PipelineParams, const double*>(p);
}

const std::array<std::string, kParamCount>& param_names() {
  static const std::array<std::string, kParamCount> names = [] {
    std::array<std::string, kParamCount> n;
    int i = 0;
    for (int j = 0; j < 5; ++j) n[i++] = "lens.kx[" + std::to_string(j) + "]";
    for (int j = 0; j < 5; ++j) n[i++] = "lens.ky[" + std::to_string(j) + "]";
    for (int j = 0; j < 9; ++j) n[i++] = "color.m[" + std::to_string(j) + "]";
    for (int j = 0; j < 3; ++j) n[i++] = "color.t[" + std::to_string(j) + "]";
    for (int l = 0; l < 4; ++l) {
      std::string base = "bloom.level" + std::to_string(l) + ".";
      n[i++] = base + "a";
      n[i++] = base + "b_raw";
      n[i++] = base + "logvar_x";
      n[i++] = base + "logvar_y";
    }
    n[i++] = "bloom.tone.eps_raw";
    n[i++] = "bloom.tone.s_raw";
    n[i++] = "noise.gamma_raw";
    n[i++] = "noise.sigma_raw";
    return n;
  }();
  return names;
}

PipelineParams default_init_params() {
  PipelineParams p;
  for (auto& lv : p.bloom_levels) {
    lv.a = 1.5;
    // Steep sigmoid: with threshold 1.5 the glow mask stays ~0 on [0,1]
    // content, keeping the fresh pipeline within the identity budget.
    lv.b_raw = inv_softplus(20.0);
    lv.logvar_x = 0.0;
    lv.logvar_y = 0.0;
  }
  p.bloom_tone.eps_raw = inv_softplus(0.1);
  p.bloom_tone.s_raw = inv_softplus(1.0);
  // softplus(-20) ~ 2e-9: noise present in the graph but visually off.
  p.noise.gamma_raw = -20.0;
  p.noise.sigma_raw = -20.0;
  return p;
}

PipelineParams exact_identity_params() {
  PipelineParams p;
  const double inf = std::numeric_limits<double>::infinity();
  for (auto& lv : p.bloom_levels) {
    lv.a = 1000.0;  // sigmoid underflows to exactly 0 for any [0,1] luma
    lv.b_raw = 0.0;
  }
  p.bloom_tone.eps_raw = -inf;  // exposure 0: tone curve is z/s
  p.bloom_tone.s_raw = inv_softplus(1.0);
  p.noise.gamma_raw = -inf;  // exact zero harvests the identity short-circuit
  p.noise.sigma_raw = -inf;
  return p;
}

void save_params(const PipelineParams& p, const std::string& path) {
  KvDoc doc;
  doc.set_i64("format_version", kFormatVersion);
  doc.set_f64("gamma", p.gamma);
  auto ptrs = param_ptrs(p);
  const auto& names = param_names();
  for (int i = 0; i < kParamCount; ++i) doc.set_f64(names[i], *ptrs[i]);
  doc.save(path);
}

PipelineParams load_params(const std::string& path) {
  KvDoc doc = KvDoc::load(path);
  if (!doc.has("format_version"))
    fail(ErrorKind::parse, path + ": missing field: format_version");
  int64_t ver = doc.get_i64("format_version");
  if (ver != kFormatVersion)
    fail(ErrorKind::parse, path + ": schema version mismatch: got " +
                               std::to_string(ver) + ", want " +
                               std::to_string(kFormatVersion));
  PipelineParams p;
  p.gamma = doc.get_f64("gamma");
  auto ptrs = param_ptrs(p);
  const auto& names = param_names();
  for (int i = 0; i < kParamCount; ++i) *ptrs[i] = doc.get_f64(names[i]);
  // Reject stray fields so files stay canonical.
  size_t expected = 2 + kParamCount;
  if (doc.entries().size() != expected)
    fail(ErrorKind::parse, path + ": unexpected extra fields");
  return p;
}

}  // namespace gas
