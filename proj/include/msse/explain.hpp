#pragma once

#include <string>

#include "msse/head.hpp"
#include "msse/image.hpp"
#include "msse/tensor.hpp"

namespace msse {

// Class-activation heatmap, min-max normalized to [0,1]. An all-zero rectified
// map stays all zeros and is flagged instead of divided.
struct Heatmap {
    int h = 0, w = 0;
    std::vector<float> values;
    int target_class = -1;
    int source_h = 0, source_w = 0;
    bool all_zero = false;

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
};

// Core rule: alpha_k = spatial mean of d(score)/dA_k over sample `b`,
// raw = ReLU(sum_k alpha_k * A_k), min-max normalize, bilinear resize to
// (out_h, out_w) (pass the source size to skip resampling).
Heatmap grad_cam_from_activations(const Tensor4<float> &activations,
                                  const Tensor4<float> &activation_grads, int b,
                                  int target_class, int out_h, int out_w);

// Grad-CAM over the head's post-residual 256-channel map (the last
// conv-shaped tensor before GAP). Dropout is off: inference mode.
Heatmap msse_grad_cam(MsseHead<float> &head, const Tensor4<float> &features, int target_class,
                      int out_h, int out_w);

// Heatmap through a fixed 256-entry blue->red table, blended as
// alpha*color + (1-alpha)*pixel with per-channel clamping. The map is
// bilinearly resized to the image size when they differ.
ImageU8 render_heatmap_overlay(const ImageU8 &image, const Heatmap &heatmap, double alpha);

void save_heatmap_csv(const Heatmap &heatmap, const std::string &path);

} // namespace msse
