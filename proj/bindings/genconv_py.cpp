#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "genconv/checkpoint.hpp"
#include "genconv/config.hpp"
#include "genconv/datasets.hpp"
#include "genconv/kdtree.hpp"
#include "genconv/model.hpp"
#include "genconv/viz.hpp"

namespace py = pybind11;
using namespace genconv;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

PointCloud cloud_from_array(const FloatArray& points, int spatial_dims) {
    auto buf = points.unchecked<2>();
    auto cols = static_cast<std::size_t>(buf.shape(1));
    if (spatial_dims < 2 || static_cast<std::size_t>(spatial_dims) > cols)
        throw ShapeError("points must have at least spatial_dims columns");
    PointCloud cloud(spatial_dims, static_cast<int>(cols) - spatial_dims,
                     static_cast<std::size_t>(buf.shape(0)));
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j)
            cloud.points(i, j) = buf(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j));
    return cloud;
}

py::array_t<float> array_from_matrix(const Matrix<float>& m) {
    py::array_t<float> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

std::vector<LabeledCloud> labeled_set(const std::vector<std::pair<FloatArray, int>>& items,
                                      int spatial_dims) {
    std::vector<LabeledCloud> set;
    set.reserve(items.size());
    for (const auto& [points, label] : items) {
        LabeledCloud sample;
        sample.cloud = cloud_from_array(points, spatial_dims);
        sample.label = label;
        set.push_back(std::move(sample));
    }
    return set;
}

class PyModel {
public:
    explicit PyModel(const std::string& config_json)
        : model_(build_model<float>(parse_model_config(config_json))) {}
    explicit PyModel(Model model) : model_(std::move(model)) {}

    std::size_t parameter_count() const { return model_.parameter_count(); }
    std::string config_json() const { return serialize_model_config(model_.config); }
    std::uint64_t epoch() const { return model_.epoch; }

    py::array_t<float> predict(const FloatArray& points) const {
        auto cloud = cloud_from_array(points, model_.config.spatial_dims);
        auto logits = model_.predict(cloud);
        py::array_t<float> out(static_cast<py::ssize_t>(logits.size()));
        std::copy(logits.begin(), logits.end(), out.mutable_data());
        return out;
    }

    std::vector<py::dict> train_on(const std::vector<std::pair<FloatArray, int>>& items,
                                   int epochs) {
        auto set = labeled_set(items, model_.config.spatial_dims);
        auto logs = train(model_, set, epochs);
        std::vector<py::dict> out;
        for (const auto& log : logs) {
            py::dict d;
            d["epoch"] = log.epoch;
            d["mean_loss"] = log.mean_loss;
            d["train_accuracy"] = log.train_accuracy;
            d["wall_seconds"] = log.wall_seconds;
            out.push_back(std::move(d));
        }
        return out;
    }

    py::tuple evaluate_on(const std::vector<std::pair<FloatArray, int>>& items) const {
        auto set = labeled_set(items, model_.config.spatial_dims);
        auto result = evaluate(model_, set);
        const auto c = static_cast<std::size_t>(model_.config.num_classes);
        py::array_t<int> confusion({c, c});
        std::copy(result.confusion.data.begin(), result.confusion.data.end(),
                  confusion.mutable_data());
        return py::make_tuple(result.accuracy, confusion);
    }

    void save(const std::filesystem::path& path) const { save_checkpoint(model_, path); }
    static PyModel load(const std::filesystem::path& path) {
        return PyModel(load_checkpoint(path));
    }

    py::array_t<double> probe(std::size_t layer, std::size_t channel, double extent,
                              std::size_t resolution, std::size_t slices) const {
        const FilterNetwork<float>* filter = nullptr;
        if (layer < model_.layers.size())
            filter = &model_.layers[layer].filter;
        else if (layer == model_.layers.size())
            filter = &model_.head.filter;
        else
            throw ShapeError("layer index out of range");
        auto img = probe_filter(*filter, model_.config.spatial_dims, channel, extent, resolution,
                                slices);
        py::array_t<double> out({img.slices, img.height, img.width});
        std::copy(img.values.begin(), img.values.end(), out.mutable_data());
        return out;
    }

private:
    Model model_;
};

}  // namespace

PYBIND11_MODULE(_genconv, m) {
    m.doc() = "Point-cloud generalized convolution toolkit";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "gen_toy_cloud",
        [](const std::string& shape, std::size_t n, float cx, float cy, float size, float jitter,
           std::uint64_t seed, bool normalize) {
            auto sample = gen_toy_cloud(toy_shape_from_name(shape), n, cx, cy, size, jitter, seed);
            if (normalize) sample.cloud = normalize_cloud(std::move(sample.cloud));
            return py::make_tuple(array_from_matrix(sample.cloud.points), sample.label);
        },
        py::arg("shape"), py::arg("n"), py::arg("cx") = 0.0f, py::arg("cy") = 0.0f,
        py::arg("size") = 1.0f, py::arg("jitter") = 0.0f, py::arg("seed") = 0,
        py::arg("normalize") = true,
        "Sample a labeled toy outline ('circle' or 'square'); returns (points, label).");

    m.def(
        "normalize",
        [](const FloatArray& points, int spatial_dims) {
            auto cloud = normalize_cloud(cloud_from_array(points, spatial_dims));
            return array_from_matrix(cloud.points);
        },
        py::arg("points"), py::arg("spatial_dims"),
        "Center coordinates on the centroid and scale the farthest point to unit norm.");

    auto knn_result = [](const NeighborTable& table) {
        py::array_t<int> indices({table.query_count, table.k});
        std::copy(table.indices.begin(), table.indices.end(), indices.mutable_data());
        py::array_t<float> distances({table.query_count, table.k});
        std::copy(table.distances.begin(), table.distances.end(), distances.mutable_data());
        return py::make_tuple(indices, distances);
    };

    m.def(
        "knn",
        [knn_result](const FloatArray& points, const FloatArray& queries, std::size_t k) {
            auto buf = points.unchecked<2>();
            int dims = static_cast<int>(buf.shape(1));
            auto pts = cloud_from_array(points, dims).points;
            auto qs = cloud_from_array(queries, dims).points;
            KdTree tree(pts, dims);
            return knn_result(tree.knn_query(qs, k));
        },
        py::arg("points"), py::arg("queries"), py::arg("k"),
        "KD-tree k-nearest-neighbor query; returns (indices, distances), ties broken by index.");

    m.def(
        "brute_knn",
        [knn_result](const FloatArray& points, const FloatArray& queries, std::size_t k) {
            auto buf = points.unchecked<2>();
            int dims = static_cast<int>(buf.shape(1));
            auto pts = cloud_from_array(points, dims).points;
            auto qs = cloud_from_array(queries, dims).points;
            return knn_result(brute_force_knn(pts, dims, qs, k));
        },
        py::arg("points"), py::arg("queries"), py::arg("k"),
        "Exhaustive k-nearest-neighbor reference with the same tie-break contract.");

    py::class_<PyModel>(m, "Model")
        .def(py::init<const std::string&>(), py::arg("config_json"))
        .def_property_readonly("parameter_count", &PyModel::parameter_count)
        .def_property_readonly("config_json", &PyModel::config_json)
        .def_property_readonly("epoch", &PyModel::epoch)
        .def("predict", &PyModel::predict, py::arg("points"),
             "Class logits for one cloud given as an (N, S + D) float array.")
        .def("train", &PyModel::train_on, py::arg("clouds"), py::arg("epochs"),
             "Train on [(points, label), ...]; returns per-epoch logs.")
        .def("evaluate", &PyModel::evaluate_on, py::arg("clouds"),
             "Returns (accuracy, confusion matrix with rows = truth).")
        .def("save", &PyModel::save, py::arg("path"))
        .def_static("load", &PyModel::load, py::arg("path"))
        .def("probe_filter", &PyModel::probe, py::arg("layer"), py::arg("channel"),
             py::arg("extent") = 0.5, py::arg("resolution") = 51, py::arg("slices") = 9,
             "Unit-sample response image of one filter channel on a coordinate grid.");
}
