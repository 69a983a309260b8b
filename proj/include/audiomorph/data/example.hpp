#pragma once

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::data {

/// One supervised transformation: render `source` (in `source_style`) as
/// `target_style`; `target` is the ground truth with the same content.
struct TransformExample {
  dsp::Spectrogram source;
  int source_style = 0;
  int target_style = 0;
  dsp::Spectrogram target;
  int content_id = 0;
};

}  // namespace audiomorph::data
