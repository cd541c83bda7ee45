// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/pipeline.hpp"

#include "gas/common.hpp"

namespace gas {

ImageBuf pipeline_fwd(const ImageBuf& img, const PipelineParams& p,
                      const CounterRng& rng, PipelineTape* tape) {
  ImageBuf x = lens_blur_fwd(img, p.lens, tape ? &tape->lens : nullptr);
  x = color_map_fwd(x, p.color, tape ? &tape->color : nullptr);
  x = bloom_fwd(x, p.bloom_levels, p.bloom_tone, tape ? &tape->bloom : nullptr);
  x = noise_fwd(x, p.noise, rng, p.gamma, tape ? &tape->noise : nullptr);
  if (tape) {
    tape->pre_clamp = x;
    tape->used = false;
  }
  for (double& v : x.data) v = clamp01(v);
  return x;
}

void pipeline_bwd(const ImageBuf& grad_out, PipelineTape& tape,
                  PipelineGrads& g) {
  if (tape.used) fail(ErrorKind::contract, "pipeline: tape reused");
  tape.used = true;
  ImageBuf gx = grad_out;
  for (size_t i = 0; i < gx.data.size(); ++i) {
    double v = tape.pre_clamp.data[i];
    if (v < 0.0 || v > 1.0) gx.data[i] = 0.0;
  }
  ImageBuf gprev;
  noise_bwd(gx, tape.noise, gprev, g.scalars.noise);
  gx = std::move(gprev);
  bloom_bwd(gx, tape.bloom, gprev, g.scalars.bloom_levels,
            g.scalars.bloom_tone);
  gx = std::move(gprev);
  color_map_bwd(gx, tape.color, gprev, g.scalars.color);
  gx = std::move(gprev);
  lens_blur_bwd(gx, tape.lens, gprev, g.scalars.lens);
  g.input = std::move(gprev);
}

}  // namespace gas
