#include "msse/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "msse/rng.hpp"

namespace msse {

namespace {

// Center-aligned bilinear resize of a single-channel float grid.
std::vector<float> resize_grid(const std::vector<float> &src, int sh, int sw, int oh, int ow) {
    if (sh == oh && sw == ow) return src;
    std::vector<float> out(static_cast<std::size_t>(oh) * ow);
    const double sy = static_cast<double>(sh) / oh;
    const double sx = static_cast<double>(sw) / ow;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(sh - 1));
            double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(sw - 1));
            const int y0 = static_cast<int>(fy);
            const int x0 = static_cast<int>(fx);
            const int y1 = std::min(y0 + 1, sh - 1);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double ay = fy - y0;
            const double ax = fx - x0;
            const double top = src[static_cast<std::size_t>(y0) * sw + x0] * (1 - ax) +
                               src[static_cast<std::size_t>(y0) * sw + x1] * ax;
            const double bot = src[static_cast<std::size_t>(y1) * sw + x0] * (1 - ax) +
                               src[static_cast<std::size_t>(y1) * sw + x1] * ax;
            out[static_cast<std::size_t>(y) * ow + x] = static_cast<float>(top * (1 - ay) + bot * ay);
        }
    return out;
}

} // namespace

Heatmap grad_cam_from_activations(const Tensor4<float> &activations,
                                  const Tensor4<float> &activation_grads, int b,
                                  int target_class, int out_h, int out_w) {
    if (!activations.same_shape(activation_grads))
        throw std::invalid_argument("grad_cam: activation/gradient shape mismatch");
    if (b < 0 || b >= activations.n) throw std::invalid_argument("grad_cam: bad batch index");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("grad_cam: bad output size");
    const int hw = activations.h * activations.w;

    // alpha_k = spatial mean of the class-score gradient over channel k
    std::vector<double> alpha(static_cast<std::size_t>(activations.c));
    for (int ch = 0; ch < activations.c; ++ch) {
        const float *gp = activation_grads.plane(b, ch);
        double sum = 0.0;
        for (int i = 0; i < hw; ++i) sum += static_cast<double>(gp[i]);
        alpha[static_cast<std::size_t>(ch)] = sum / hw;
    }

    std::vector<float> raw(static_cast<std::size_t>(hw), 0.0f);
    for (int i = 0; i < hw; ++i) {
        double v = 0.0;
        for (int ch = 0; ch < activations.c; ++ch)
            v += alpha[static_cast<std::size_t>(ch)] *
                 static_cast<double>(activations.plane(b, ch)[i]);
        raw[static_cast<std::size_t>(i)] = static_cast<float>(std::max(v, 0.0));
    }

    Heatmap map;
    map.target_class = target_class;
    map.source_h = activations.h;
    map.source_w = activations.w;
    const float mx = *std::max_element(raw.begin(), raw.end());
    const float mn = *std::min_element(raw.begin(), raw.end());
    if (mx <= 0.0f) {
        map.all_zero = true;
        std::fill(raw.begin(), raw.end(), 0.0f);
    } else if (mx == mn) {
        std::fill(raw.begin(), raw.end(), 1.0f); // constant positive map
    } else {
        for (auto &v : raw) v = (v - mn) / (mx - mn);
    }
    map.values = resize_grid(raw, activations.h, activations.w, out_h, out_w);
    map.h = out_h;
    map.w = out_w;
    return map;
}

Heatmap msse_grad_cam(MsseHead<float> &head, const Tensor4<float> &features, int target_class,
                      int out_h, int out_w) {
    const MsseHeadConfig &cfg = head.config();
    if (target_class < 0 || target_class >= cfg.num_classes)
        throw std::invalid_argument("grad_cam: target class " + std::to_string(target_class) +
                                    " outside [0," + std::to_string(cfg.num_classes) + ")");
    if (features.n != 1) throw std::invalid_argument("grad_cam: expects a single-image batch");

    Rng unused(0);
    MsseHeadTape<float> tape;
    head.forward(features, /*train=*/false, unused, &tape);

    // The class score reaches z only through GAP -> FC, so
    // d(score)/dz[k,y,x] = W_fc[k][target] / (h*w).
    const Tensor4<float> &z = tape.z;
    const Param<float> &fc = head.params().at("fc.w");
    Tensor4<float> dz(z.n, z.c, z.h, z.w);
    const float inv_hw = 1.0f / static_cast<float>(z.h * z.w);
    for (int ch = 0; ch < z.c; ++ch) {
        const float wv =
            fc.value[static_cast<std::size_t>(ch) * cfg.num_classes + target_class] * inv_hw;
        float *p = dz.plane(0, ch);
        for (int i = 0; i < z.h * z.w; ++i) p[i] = wv;
    }
    return grad_cam_from_activations(z, dz, 0, target_class, out_h, out_w);
}

ImageU8 render_heatmap_overlay(const ImageU8 &image, const Heatmap &heatmap, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("overlay: alpha must be in [0, 1]");
    if (!image.valid()) throw std::invalid_argument("overlay: invalid image");
    const std::vector<float> grid =
        resize_grid(heatmap.values, heatmap.h, heatmap.w, image.height, image.width);
    ImageU8 out = image;
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const float v = grid[static_cast<std::size_t>(y) * image.width + x];
            // 256-entry blue -> red ramp
            const int idx = std::clamp(static_cast<int>(v * 255.0f + 0.5f), 0, 255);
            const double color[3] = {static_cast<double>(idx), 0.0,
                                     static_cast<double>(255 - idx)};
            for (int ch = 0; ch < 3; ++ch) {
                const double blended =
                    alpha * color[ch] + (1.0 - alpha) * static_cast<double>(image.at(x, y, ch));
                out.at(x, y, ch) =
                    static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0l, 255l));
            }
        }
    return out;
}

void save_heatmap_csv(const Heatmap &heatmap, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("heatmap: cannot open " + path + " for writing");
    char buf[32];
    for (int y = 0; y < heatmap.h; ++y) {
        for (int x = 0; x < heatmap.w; ++x) {
            std::snprintf(buf, sizeof buf, "%.6f", heatmap.at(y, x));
            out << (x ? "," : "") << buf;
        }
        out << "\n";
    }
}

} // namespace msse
