#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "msse/augment.hpp"
#include "msse/backbone.hpp"
#include "msse/explain.hpp"
#include "msse/head.hpp"
#include "msse/manifest.hpp"
#include "msse/metrics.hpp"
#include "msse/phash.hpp"
#include "msse/trainer.hpp"

namespace py = pybind11;
using namespace msse;

namespace {

Tensor4<float> tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast> &arr) {
    if (arr.ndim() != 4) throw std::invalid_argument("expected a (n, c, h, w) float array");
    Tensor4<float> t(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                     static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(3)));
    std::copy(arr.data(), arr.data() + t.size(), t.data.begin());
    return t;
}

py::array_t<float> array_from_tensor(const Tensor4<float> &t) {
    py::array_t<float> arr({t.n, t.c, t.h, t.w});
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

py::array_t<float> array_from_tensor2(const Tensor2<float> &t) {
    py::array_t<float> arr({t.rows, t.cols});
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

ImageU8 image_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> &arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw std::invalid_argument("expected a (h, w, 3) uint8 array");
    ImageU8 img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::copy(arr.data(), arr.data() + img.pixels.size(), img.pixels.begin());
    return img;
}

py::array_t<std::uint8_t> array_from_image(const ImageU8 &img) {
    py::array_t<std::uint8_t> arr({img.height, img.width, 3});
    std::copy(img.pixels.begin(), img.pixels.end(), arr.mutable_data());
    return arr;
}

ConfusionMatrix cm_from_array(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> &arr) {
    if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1))
        throw std::invalid_argument("expected a square (k, k) int64 confusion matrix");
    ConfusionMatrix m(static_cast<int>(arr.shape(0)));
    std::copy(arr.data(), arr.data() + m.counts.size(), m.counts.begin());
    return m;
}

MiniDenseNetConfig backbone_config(int input_size, int stem_channels,
                                   const std::vector<std::pair<int, int>> &blocks,
                                   double compression) {
    MiniDenseNetConfig cfg;
    cfg.input_size = input_size;
    cfg.stem_channels = stem_channels;
    if (!blocks.empty()) {
        cfg.blocks.clear();
        for (auto [layers, growth] : blocks) cfg.blocks.push_back({layers, growth});
    }
    cfg.compression = compression;
    return cfg;
}

// SampleProvider over a pre-assembled (N,3,H,W) array.
class ArrayProvider : public SampleProvider {
public:
    explicit ArrayProvider(Tensor4<float> images) : images_(std::move(images)) {}

    std::size_t count() const override { return static_cast<std::size_t>(images_.n); }
    bool epoch_varying(std::size_t) const override { return false; }

    Tensor4<float> image(std::size_t record, int) override {
        Tensor4<float> out(1, images_.c, images_.h, images_.w);
        std::copy(images_.plane(static_cast<int>(record), 0),
                  images_.plane(static_cast<int>(record), 0) + out.size(), out.data.begin());
        return out;
    }

private:
    Tensor4<float> images_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "multi-scale squeeze-excitation damage classifier core";

    py::class_<MsseHeadConfig>(m, "MsseHeadConfig")
        .def(py::init([](int in_channels, int proj_channels, int se_ratio, int spatial_kernel,
                         double dropout_rate, int num_classes, int kernel_small,
                         int kernel_large) {
                 MsseHeadConfig cfg;
                 cfg.in_channels = in_channels;
                 cfg.proj_channels = proj_channels;
                 cfg.fused_channels = 2 * proj_channels;
                 cfg.se_ratio = se_ratio;
                 cfg.spatial_kernel = spatial_kernel;
                 cfg.dropout_rate = dropout_rate;
                 cfg.num_classes = num_classes;
                 cfg.branch_kernel_small = kernel_small;
                 cfg.branch_kernel_large = kernel_large;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("in_channels") = 1920, py::arg("proj_channels") = 128,
             py::arg("se_ratio") = 16, py::arg("spatial_kernel") = 7,
             py::arg("dropout_rate") = 0.3, py::arg("num_classes") = 9,
             py::arg("kernel_small") = 3, py::arg("kernel_large") = 5)
        .def_readonly("in_channels", &MsseHeadConfig::in_channels)
        .def_readonly("fused_channels", &MsseHeadConfig::fused_channels)
        .def_readonly("num_classes", &MsseHeadConfig::num_classes);

    py::class_<MsseHead<float>>(m, "MsseHead")
        .def(py::init<const MsseHeadConfig &>(), py::arg("config"))
        .def("init", &MsseHead<float>::init, py::arg("seed"))
        .def(
            "forward",
            [](MsseHead<float> &head, const py::array_t<float> &features, bool train,
               std::uint64_t seed) {
                Rng rng(seed);
                return array_from_tensor2(head.forward(tensor_from_array(features), train, rng));
            },
            py::arg("features"), py::arg("train") = false, py::arg("seed") = 0)
        .def(
            "grad_cam",
            [](MsseHead<float> &head, const py::array_t<float> &features, int target_class,
               int out_size) {
                Tensor4<float> f = tensor_from_array(features);
                const int size = out_size > 0 ? out_size : f.h;
                Heatmap map = msse_grad_cam(head, f, target_class, size, size);
                py::array_t<float> arr({map.h, map.w});
                std::copy(map.values.begin(), map.values.end(), arr.mutable_data());
                return arr;
            },
            py::arg("features"), py::arg("target_class"), py::arg("out_size") = 0)
        .def_property_readonly("num_params", [](MsseHead<float> &head) {
            return head.params().total_values();
        });

    py::class_<MiniDenseNet<float>>(m, "MiniDenseNet")
        .def(py::init([](int input_size, int stem_channels,
                         const std::vector<std::pair<int, int>> &blocks, double compression,
                         bool trainable) {
                 return std::make_unique<MiniDenseNet<float>>(
                     backbone_config(input_size, stem_channels, blocks, compression), trainable);
             }),
             py::arg("input_size") = 56, py::arg("stem_channels") = 16,
             py::arg("blocks") = std::vector<std::pair<int, int>>{{4, 8}, {4, 8}},
             py::arg("compression") = 0.5, py::arg("trainable") = false)
        .def("init", &MiniDenseNet<float>::init, py::arg("seed"))
        .def("extract",
             [](MiniDenseNet<float> &net, const py::array_t<float> &images) {
                 return array_from_tensor(net.extract(tensor_from_array(images)));
             })
        .def_property_readonly("output_channels", &MiniDenseNet<float>::output_channels)
        .def_property_readonly("output_h", &MiniDenseNet<float>::output_h)
        .def_property_readonly("output_w", &MiniDenseNet<float>::output_w);

    m.def(
        "fit",
        [](MiniDenseNet<float> &backbone, MsseHead<float> &head, const py::array_t<float> &images,
           const std::vector<int> &labels, const std::vector<std::size_t> &train_idx,
           const std::vector<std::size_t> &val_idx, int epochs, int batch_size,
           double learning_rate, std::uint64_t seed, bool freeze_backbone) {
            ArrayProvider provider(tensor_from_array(images));
            FitData data;
            data.labels = labels;
            data.train = train_idx;
            data.val = val_idx;
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.seed = seed;
            cfg.freeze_backbone = freeze_backbone;
            TrainState state;
            TrainLog log = fit(backbone, head, provider, data, cfg, state);
            py::list out;
            for (const auto &e : log.epochs)
                out.append(py::make_tuple(e.epoch, e.train_loss, e.val_accuracy));
            return out;
        },
        py::arg("backbone"), py::arg("head"), py::arg("images"), py::arg("labels"),
        py::arg("train_idx"), py::arg("val_idx"), py::arg("epochs") = 5,
        py::arg("batch_size") = 64, py::arg("learning_rate") = 1e-3, py::arg("seed") = 42,
        py::arg("freeze_backbone") = true);

    m.def("phash64",
          [](const py::array_t<std::uint8_t> &image) { return phash64(image_from_array(image)); });
    m.def("hamming", &hamming, py::arg("a"), py::arg("b"));
    m.def("similarity", &phash_similarity, py::arg("a"), py::arg("b"));
    m.def(
        "dedup",
        [](const std::vector<std::uint64_t> &hashes, double tau) {
            std::vector<ManifestRecord> records(hashes.size());
            for (std::size_t i = 0; i < hashes.size(); ++i) {
                records[i].path = std::to_string(i);
                records[i].phash = hashes[i];
            }
            DedupResult r = dedup_filter(records, tau);
            return r.retained;
        },
        py::arg("hashes"), py::arg("tau") = 0.30);

    m.def("confusion", [](const std::vector<int> &truth, const std::vector<int> &pred, int k) {
        ConfusionMatrix cm = confusion(truth, pred, k);
        py::array_t<std::int64_t> arr({k, k});
        std::copy(cm.counts.begin(), cm.counts.end(), arr.mutable_data());
        return arr;
    });
    m.def("class_metrics", [](const py::array_t<std::int64_t> &cm_arr) {
        MetricsSummary s = class_metrics(cm_from_array(cm_arr));
        py::dict out;
        out["accuracy"] = s.accuracy;
        py::list per_class;
        for (const auto &c : s.per_class) {
            py::dict d;
            d["precision"] = c.precision;
            d["recall"] = c.recall;
            d["f1"] = c.f1;
            d["support"] = c.support;
            per_class.append(d);
        }
        out["per_class"] = per_class;
        out["macro_f1"] = s.macro_f1;
        out["weighted_recall"] = s.weighted_recall;
        return out;
    });
    m.def("cohen_kappa", [](const py::array_t<std::int64_t> &cm_arr) {
        KappaResult r = cohen_kappa(cm_from_array(cm_arr));
        return py::make_tuple(r.kappa, r.po, r.pe);
    });
    m.def(
        "roc_auc",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &scores,
           const std::vector<int> &labels, const std::string &averaging) {
            if (scores.ndim() != 2) throw std::invalid_argument("scores must be (n, k)");
            std::vector<double> flat(scores.data(), scores.data() + scores.size());
            return roc_curve(flat, static_cast<int>(scores.shape(1)), labels,
                             averaging_from_string(averaging))
                .auc;
        },
        py::arg("scores"), py::arg("labels"), py::arg("averaging") = "micro");
    m.def(
        "average_precision",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast> &scores,
           const std::vector<int> &labels, const std::string &averaging) {
            if (scores.ndim() != 2) throw std::invalid_argument("scores must be (n, k)");
            std::vector<double> flat(scores.data(), scores.data() + scores.size());
            return pr_curve(flat, static_cast<int>(scores.shape(1)), labels,
                            averaging_from_string(averaging))
                .average_precision;
        },
        py::arg("scores"), py::arg("labels"), py::arg("averaging") = "micro");

    m.def(
        "augment",
        [](const py::array_t<std::uint8_t> &image, std::uint64_t seed, double rotation_deg,
           double crop_min_frac, double brightness_delta) {
            AugmentSpec spec;
            spec.rotation_deg = rotation_deg;
            spec.crop_min_frac = crop_min_frac;
            spec.brightness_delta = brightness_delta;
            Rng rng(seed);
            return array_from_image(augment(image_from_array(image), spec, rng));
        },
        py::arg("image"), py::arg("seed") = 0, py::arg("rotation_deg") = 20.0,
        py::arg("crop_min_frac") = 0.8, py::arg("brightness_delta") = 40.0);

    m.def(
        "render_overlay",
        [](const py::array_t<std::uint8_t> &image, const py::array_t<float> &heat, double alpha) {
            if (heat.ndim() != 2) throw std::invalid_argument("heatmap must be (h, w)");
            Heatmap map;
            map.h = static_cast<int>(heat.shape(0));
            map.w = static_cast<int>(heat.shape(1));
            auto view = heat.unchecked<2>();
            map.values.resize(static_cast<std::size_t>(map.h) * map.w);
            for (int y = 0; y < map.h; ++y)
                for (int x = 0; x < map.w; ++x)
                    map.values[static_cast<std::size_t>(y) * map.w + x] = view(y, x);
            return array_from_image(render_heatmap_overlay(image_from_array(image), map, alpha));
        },
        py::arg("image"), py::arg("heatmap"), py::arg("alpha") = 0.5);
}
