#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "genconv/bench.hpp"
#include "genconv/checkpoint.hpp"
#include "genconv/config.hpp"
#include "genconv/datasets.hpp"
#include "genconv/model.hpp"
#include "genconv/viz.hpp"

namespace fs = std::filesystem;
using namespace genconv;

namespace {

// Exit codes: 0 success, 1 usage, 2 config, 3 data, 4 numerical.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct ToyOptions {
    std::string out_dir;
    std::size_t n_train = 1000;
    std::size_t n_test = 500;
    std::size_t points = 100;
    double jitter = 0.01;
    std::uint64_t seed = 0;
};

void run_gen_toy(const ToyOptions& opt) {
    fs::create_directories(fs::path(opt.out_dir) / "train");
    fs::create_directories(fs::path(opt.out_dir) / "test");
    std::ofstream manifest(fs::path(opt.out_dir) / "manifest.csv");
    if (!manifest) throw DataError("cannot write manifest in " + opt.out_dir);
    manifest << "file,split,label,class\n";
    auto emit = [&](const char* split, std::size_t count, std::uint64_t salt) {
        Rng param_rng(derive_seed(opt.seed, split) ^ salt);
        for (std::size_t i = 0; i < count; ++i) {
            // Alternate classes for balance; vary center and size per cloud.
            ToyShape shape = (i % 2 == 0) ? ToyShape::Circle : ToyShape::Square;
            float cx = static_cast<float>(param_rng.uniform(-0.5, 0.5));
            float cy = static_cast<float>(param_rng.uniform(-0.5, 0.5));
            float size = static_cast<float>(param_rng.uniform(0.5, 1.5));
            std::uint64_t cloud_seed = param_rng.next_u64();
            auto sample = gen_toy_cloud(shape, opt.points, cx, cy, size,
                                        static_cast<float>(opt.jitter), cloud_seed);
            sample.cloud = normalize_cloud(std::move(sample.cloud));
            std::string name = std::string(split) + "/" + std::string(split) + "_" +
                               std::to_string(i) + ".pcld";
            save_pcld(sample, fs::path(opt.out_dir) / name);
            manifest << name << ',' << split << ',' << sample.label << ',' << sample.class_name
                     << '\n';
        }
    };
    emit("train", opt.n_train, 1);
    emit("test", opt.n_test, 2);
    std::cout << "wrote " << (opt.n_train + opt.n_test) << " clouds to " << opt.out_dir << "\n";
}

std::vector<LabeledCloud> load_pcld_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pcld")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .pcld files in " + dir.string());
    std::vector<LabeledCloud> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_pcld(f));
    return out;
}

struct Splits {
    std::vector<LabeledCloud> train, test;
};

Splits load_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
    Splits s;
    if (cfg.type == "pcld") {
        s.train = load_pcld_dir(fs::path(cfg.path) / "train");
        s.test = load_pcld_dir(fs::path(cfg.path) / "test");
    } else if (cfg.type == "modelnet10") {
        auto data = load_modelnet10(cfg.path, cfg.points_per_cloud, seed);
        for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
        s.train = std::move(data.train);
        s.test = std::move(data.test);
    } else {
        throw ConfigError("unknown dataset type '" + cfg.type + "'");
    }
    return s;
}

void write_epoch_log(const std::vector<EpochLog>& logs, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write epoch log: " + path.string());
    out << "epoch,mean_loss,train_acc,wall_seconds\n";
    out.precision(9);
    for (const auto& l : logs)
        out << l.epoch << ',' << l.mean_loss << ',' << l.train_accuracy << ',' << l.wall_seconds
            << '\n';
}

void write_confusion_csv(const Matrix<int>& confusion, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write confusion matrix: " + path.string());
    for (std::size_t r = 0; r < confusion.rows; ++r) {
        for (std::size_t c = 0; c < confusion.cols; ++c) {
            if (c) out << ',';
            out << confusion(r, c);
        }
        out << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized convolution point-cloud toolkit"};
    app.require_subcommand(1);

    // gen-toy
    ToyOptions toy;
    auto* gen_toy = app.add_subcommand("gen-toy", "Generate the 2D squares/circles toy dataset");
    gen_toy->add_option("--out", toy.out_dir, "Output directory")->required();
    gen_toy->add_option("--n-train", toy.n_train, "Training clouds");
    gen_toy->add_option("--n-test", toy.n_test, "Test clouds");
    gen_toy->add_option("--points", toy.points, "Points per cloud");
    gen_toy->add_option("--jitter", toy.jitter, "Jitter as a fraction of shape size");
    gen_toy->add_option("--seed", toy.seed, "Root seed");

    // train
    std::string train_config_path, train_out;
    std::optional<std::uint64_t> train_seed;
    std::optional<int> train_epochs;
    int threads = 1;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
    train_cmd->add_option("--config", train_config_path, "Run config (JSON)")->required();
    train_cmd->add_option("--out", train_out, "Output directory");
    train_cmd->add_option("--seed", train_seed, "Override config seed");
    train_cmd->add_option("--epochs", train_epochs, "Override config epochs");
    train_cmd->add_option("--threads", threads, "Worker threads for data loading / eval");

    // eval
    std::string eval_ckpt, eval_data, eval_type = "pcld", eval_out = ".";
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--data-type", eval_type, "Dataset type: pcld or modelnet10");
    eval_cmd->add_option("--out", eval_out, "Output directory");

    // visualize
    std::string viz_ckpt, viz_out = ".";
    std::size_t viz_layer = 0, viz_resolution = 51, viz_slices = 9;
    double viz_extent = 0.5;
    bool viz_gray = false;
    auto* viz_cmd = app.add_subcommand("visualize", "Render learned continuous filters");
    viz_cmd->add_option("--checkpoint", viz_ckpt, "Checkpoint file")->required();
    viz_cmd->add_option("--layer", viz_layer, "Layer index (layers, then head last)");
    viz_cmd->add_option("--resolution", viz_resolution, "Probe grid resolution");
    viz_cmd->add_option("--extent", viz_extent, "Half-width of the probed region");
    viz_cmd->add_option("--slices", viz_slices, "Z slices for 3D filters");
    viz_cmd->add_option("--out", viz_out, "Output directory");
    viz_cmd->add_flag("--grayscale", viz_gray, "PGM grayscale instead of PPM diverging");

    // bench
    std::vector<std::size_t> bench_counts{2048, 4096, 8192, 16384};
    std::size_t bench_k = 16;
    int bench_reps = 5;
    std::string bench_out = "bench.csv";
    std::uint64_t bench_seed = 0;
    auto* bench_cmd = app.add_subcommand("bench", "KNN / forward scaling benchmark");
    bench_cmd->add_option("--counts", bench_counts, "Ascending point counts");
    bench_cmd->add_option("--k", bench_k, "Neighbors per query");
    bench_cmd->add_option("--reps", bench_reps, "Repetitions per point count");
    bench_cmd->add_option("--out", bench_out, "Output CSV path");
    bench_cmd->add_option("--seed", bench_seed, "Root seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;   // usage error
    }

    try {
        if (gen_toy->parsed()) {
            run_gen_toy(toy);
        } else if (train_cmd->parsed()) {
            auto cfg = load_run_config(train_config_path);
            if (train_seed) cfg.model.seed = *train_seed;
            if (train_epochs) cfg.model.epochs = *train_epochs;
            (void)threads;   // training updates are sequential by contract
            if (train_out.empty()) train_out = cfg.out_dir.empty() ? "." : cfg.out_dir;
            auto splits = load_dataset(cfg.dataset, cfg.model.seed);
            auto model = build_model<float>(cfg.model);
            std::cout << "parameters: " << model.parameter_count() << "\n";
            auto logs = train(model, splits.train, cfg.model.epochs, [](const EpochLog& l) {
                std::cout << "epoch " << l.epoch << "  loss " << l.mean_loss << "  acc "
                          << l.train_accuracy << "  (" << l.wall_seconds << "s)\n";
            });
            fs::create_directories(train_out);
            save_checkpoint(model, fs::path(train_out) / "checkpoint.gckp");
            write_epoch_log(logs, fs::path(train_out) / "train_log.csv");
            if (!logs.empty())
                std::cout << "final train accuracy: " << logs.back().train_accuracy << "\n";
            if (!splits.test.empty()) {
                auto result = evaluate(model, splits.test);
                std::cout << "test accuracy: " << result.accuracy << "\n";
            }
        } else if (eval_cmd->parsed()) {
            auto model = load_checkpoint(eval_ckpt);
            DatasetConfig dcfg;
            dcfg.type = eval_type;
            dcfg.path = eval_data;
            auto splits = load_dataset(dcfg, model.config.seed);
            auto result = evaluate(model, splits.test.empty() ? splits.train : splits.test);
            std::cout << "accuracy: " << result.accuracy << "\n";
            fs::create_directories(eval_out);
            write_confusion_csv(result.confusion, fs::path(eval_out) / "confusion.csv");
        } else if (viz_cmd->parsed()) {
            auto model = load_checkpoint(viz_ckpt);
            const FilterNetwork<float>* filter = nullptr;
            if (viz_layer < model.layers.size()) filter = &model.layers[viz_layer].filter;
            else if (viz_layer == model.layers.size()) filter = &model.head.filter;
            else throw ConfigError("layer index out of range");
            fs::create_directories(viz_out);
            for (std::size_t ch = 0; ch < filter->output_width(); ++ch) {
                auto img = probe_filter(*filter, model.config.spatial_dims, ch, viz_extent,
                                        viz_resolution, viz_slices);
                std::string name = "layer" + std::to_string(viz_layer) + "_ch" +
                                   std::to_string(ch) + (viz_gray ? ".pgm" : ".ppm");
                write_image(img, fs::path(viz_out) / name,
                            viz_gray ? Colormap::Grayscale : Colormap::RedBlueDiverging);
            }
            std::cout << "wrote " << filter->output_width() << " filter images to " << viz_out
                      << "\n";
        } else if (bench_cmd->parsed()) {
            auto rows = bench_scaling(bench_counts, bench_k, BenchLayerSpec{}, bench_reps,
                                      bench_seed);
            write_bench_csv(rows, bench_out);
            for (const auto& row : rows)
                std::cout << row.n_points << "  knn " << row.knn_ms << "ms  forward "
                          << row.forward_ms << "ms\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
