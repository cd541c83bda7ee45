// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gas/stages.hpp"

namespace gas {

struct PipelineTape {
  LensTape lens;
  ColorTape color;
  BloomTape bloom;
  NoiseTape noise;
  ImageBuf pre_clamp;
  bool used = false;
};

// Full stage chain: lens blur -> color map -> bloom -> sensor noise, then a
// final clamp to [0,1]. Pass a tape to record for backward (training);
// nullptr runs the same math without caching.
ImageBuf pipeline_fwd(const ImageBuf& img, const PipelineParams& p,
                      const CounterRng& rng, PipelineTape* tape);

// Accumulates all 42 scalar grads into g.scalars and writes the input-image
// grad to g.input. Clamp subgradient: 1 inside [0,1], 0 outside.
void pipeline_bwd(const ImageBuf& grad_out, PipelineTape& tape,
                  PipelineGrads& g);

}  // namespace gas
