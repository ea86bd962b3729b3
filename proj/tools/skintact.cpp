// skintact — simulate, calibrate, train and evaluate contact localization on
// an artificial capacitive skin.
//
// Exit codes: 0 success, 2 usage/validation, 3 I/O, 4 file schema.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skintact/collect.hpp"
#include "skintact/harness.hpp"
#include "skintact/localizer.hpp"
#include "skintact/runconfig.hpp"
#include "skintact/semicone.hpp"
#include "skintact/skinsim.hpp"

namespace {

using namespace skintact;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSchema = 4;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonArgs& common) {
    RunConfig cfg;
    if (!common.config_path.empty()) cfg = load_run_config(common.config_path);
    if (common.seed) cfg.seed = *common.seed;
    return cfg;
}

SensorGrid grid_for(const RunConfig& cfg, const SurfaceMesh& mesh) {
    return build_semicone_skin(mesh, cfg.fixture, derive_seed(cfg.seed, "layout"), cfg.skin);
}

CollectConfig collect_config_for(const RunConfig& cfg) {
    CollectConfig cc;
    cc.frames_per_log = cfg.frames;
    cc.finger_sigma = cfg.finger_sigma;
    cc.dense_spacing = cfg.dense_spacing;
    return cc;
}

int cmd_genmesh(const RunConfig& cfg, const std::string& out_path, const std::vector<double>& dims,
                std::optional<double> taper) {
    SemiconeSpec spec = cfg.fixture;
    if (!dims.empty()) {
        spec.width = dims[0];
        spec.depth = dims[1];
        spec.height = dims[2];
    }
    if (taper) spec.taper = *taper;
    SurfaceMesh mesh = semicone_mesh(spec);
    write_mesh(mesh, out_path);
    std::cout << "wrote " << out_path << " (" << mesh.vertices.size() << " vertices, "
              << mesh.triangles.size() << " triangles, " << mesh.edges.size() << " edges)\n";
    return 0;
}

void write_snr_report(const SnrReport& snr, const std::string& path) {
    nlohmann::json per_sensor = nlohmann::json::array();
    for (const auto& db : snr.per_sensor_db)
        per_sensor.push_back(db ? nlohmann::json(*db) : nlohmann::json(nullptr));
    nlohmann::json j{{"schema", "snr-report-v1"},
                     {"defined_count", snr.defined_count},
                     {"mean_db", snr.defined_count > 0 ? nlohmann::json(snr.mean_db)
                                                       : nlohmann::json(nullptr)},
                     {"per_sensor_db", std::move(per_sensor)}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write SNR report: " + path);
    out << j.dump(2) << "\n";
}

int cmd_calibrate(const RunConfig& cfg, const std::string& out_path,
                  const std::string& snr_path) {
    SurfaceMesh mesh = load_mesh(cfg.mesh_path);
    SensorGrid grid = grid_for(cfg, mesh);
    NoiseSpec noise{cfg.sigma_read, derive_seed(cfg.seed, "calibrate")};
    CalibrationDataset dataset = collect_dataset(mesh, grid, parse_strategy(cfg.strategy), cfg.n,
                                                 noise, collect_config_for(cfg));
    export_jsonl(dataset, out_path);

    SnrReport snr = compute_snr(dataset);
    write_snr_report(snr, snr_path);

    std::printf("%d point logs -> %s\n", static_cast<int>(dataset.point_logs.size()),
                out_path.c_str());
    std::printf("mean SNR: %.3f dB over %d/64 sensors\n", snr.mean_db, snr.defined_count);
    return 0;
}

int cmd_snr(const std::string& data_path, const std::string& out_path) {
    CalibrationDataset dataset = import_jsonl(data_path);
    SnrReport snr = compute_snr(dataset);
    if (!out_path.empty()) write_snr_report(snr, out_path);
    std::printf("mean SNR: %.3f dB over %d/64 sensors\n", snr.mean_db, snr.defined_count);
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& model_path) {
    CalibrationDataset dataset = import_jsonl(data_path);
    SurfaceMesh mesh = load_mesh(cfg.mesh_path);
    SurfacePointSet surface = discretize_surface(mesh, cfg.surface_spacing);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train");
    TrainedLocalizer model = train(dataset, surface, tc);
    save_localizer(model, model_path);

    std::vector<SensorImage> images;
    std::vector<Vec3> targets;
    for (const auto& log : dataset.point_logs) {
        images.push_back(sensor_image(log, dataset.baseline));
        targets.push_back(log.location);
    }
    std::printf("trained on %d point logs, final loss %.6f mm^2 -> %s\n",
                static_cast<int>(dataset.point_logs.size()),
                mse_loss(model.params, model.norm, images, targets), model_path.c_str());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::vector<double>& values,
                const std::string& data_path, int index) {
    TrainedLocalizer model = load_localizer(model_path);
    SensorImage image;
    if (!values.empty()) {
        if (values.size() != static_cast<std::size_t>(kSensorCount))
            throw std::invalid_argument("expected 64 sensor values, got " +
                                        std::to_string(values.size()));
        std::copy(values.begin(), values.end(), image.values.begin());
    } else if (!data_path.empty()) {
        CalibrationDataset dataset = import_jsonl(data_path);
        if (index < 0 || index >= static_cast<int>(dataset.point_logs.size()))
            throw std::invalid_argument("log index " + std::to_string(index) +
                                        " out of range (dataset has " +
                                        std::to_string(dataset.point_logs.size()) + " logs)");
        image = sensor_image(dataset.point_logs[index], dataset.baseline);
    } else {
        throw std::invalid_argument("predict needs --values or --data");
    }
    SurfaceProjection proj = predict(model, image);
    std::printf("%.6f %.6f %.6f %.6f\n", proj.point.x, proj.point.y, proj.point.z, proj.distance);
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& out_dir) {
    SurfaceMesh mesh = load_mesh(cfg.mesh_path);
    ExperimentConfig ec;
    ec.train_sizes = cfg.sizes;
    ec.validation_size = cfg.validation_size;
    ec.train_strategy = parse_strategy(cfg.strategy);
    ec.nested = cfg.nested;
    ec.replicate_seeds.clear();
    for (int r = 0; r < cfg.replicates; ++r)
        ec.replicate_seeds.push_back(derive_seed(cfg.seed, "replicate-" + std::to_string(r)));
    ec.layout_seed = derive_seed(cfg.seed, "layout");
    ec.skin = cfg.skin;
    ec.noise.sigma_read = cfg.sigma_read;
    ec.collect = collect_config_for(cfg);
    ec.train = cfg.train;
    ec.surface_spacing = cfg.surface_spacing;

    SweepResult result = run_size_sweep(mesh, semicone_chart(cfg.fixture), ec);

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/report.csv";
    const std::string json_path = out_dir + "/report.json";
    emit_report(result, csv_path, ReportFormat::csv);
    emit_report(result, json_path, ReportFormat::json);

    std::vector<double> mean_by_size;
    for (const auto& row : result.snr.per_size) {
        double mean_err = 0.0;
        int cells = 0;
        for (const auto& e : result.errors.per_model)
            if (e.train_size == row.train_size) {
                mean_err += e.mean_error_mm;
                ++cells;
            }
        mean_by_size.push_back(mean_err / cells);
        std::printf("size %3d: mean error %.3f mm, mean SNR %.3f dB\n", row.train_size,
                    mean_by_size.back(), row.mean_snr_db);
    }
    if (mean_by_size.size() >= 3) {
        std::printf("leveling: early delta %.3f mm, late delta %.3f mm\n",
                    mean_by_size[1] - mean_by_size[0],
                    mean_by_size[mean_by_size.size() - 1] - mean_by_size[mean_by_size.size() - 2]);
    }
    std::printf("reports: %s, %s\n", csv_path.c_str(), json_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contact localization toolchain for a simulated capacitive skin"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs common;
    app.add_option("--config", common.config_path, "flat key=value config file");
    app.add_option("--seed", common.seed, "global seed; every sub-seed derives from it");

    // genmesh
    auto* genmesh = app.add_subcommand("genmesh", "write the procedural semicone fixture mesh");
    std::string genmesh_out = "semicone_mesh.txt";
    std::vector<double> genmesh_dims;
    std::optional<double> genmesh_taper;
    genmesh->add_option("--out", genmesh_out, "output mesh path");
    genmesh->add_option("--dims", genmesh_dims, "width depth height (mm)")->expected(3);
    genmesh->add_option("--taper", genmesh_taper, "cross-section shrink fraction at the top");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "collect a point-log dataset and its SNR");
    std::string cal_mesh, cal_out = "dataset.jsonl", cal_snr_out, cal_strategy;
    std::optional<int> cal_n;
    calibrate->add_option("--mesh", cal_mesh, "mesh file");
    calibrate->add_option("--out", cal_out, "dataset JSONL path");
    calibrate->add_option("--snr-out", cal_snr_out, "SNR report path (default <out>.snr.json)");
    calibrate->add_option("--strategy", cal_strategy, "random | even");
    calibrate->add_option("--n", cal_n, "number of point logs");

    // snr
    auto* snr = app.add_subcommand("snr", "per-sensor SNR of an existing dataset");
    std::string snr_data, snr_out;
    snr->add_option("--data", snr_data, "dataset JSONL path")->required();
    snr->add_option("--out", snr_out, "optional JSON report path");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a localizer from a dataset");
    std::string train_data, train_mesh, train_out = "model.json";
    std::optional<int> train_epochs;
    std::optional<double> train_lr, train_spacing;
    train_cmd->add_option("--data", train_data, "dataset JSONL path")->required();
    train_cmd->add_option("--mesh", train_mesh, "mesh file");
    train_cmd->add_option("--out", train_out, "model JSON path");
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--spacing", train_spacing, "surface point spacing (mm)");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "project one sensor image to the surface");
    std::string pred_model, pred_data;
    std::vector<double> pred_values;
    int pred_index = 0;
    predict_cmd->add_option("--model", pred_model, "model JSON path")->required();
    predict_cmd->add_option("--values", pred_values, "inline sensor image (64 values)");
    predict_cmd->add_option("--data", pred_data, "dataset JSONL to take the image from");
    predict_cmd->add_option("--index", pred_index, "point-log index within --data");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "dataset-size sweep with error and SNR reports");
    std::string sweep_mesh, sweep_out_dir = ".";
    std::vector<int> sweep_sizes;
    std::optional<int> sweep_replicates, sweep_validation, sweep_epochs;
    sweep->add_option("--mesh", sweep_mesh, "mesh file");
    sweep->add_option("--out-dir", sweep_out_dir, "directory for report.csv / report.json");
    sweep->add_option("--sizes", sweep_sizes, "training dataset sizes");
    sweep->add_option("--replicates", sweep_replicates, "replicate seeds per size");
    sweep->add_option("--validation-size", sweep_validation, "validation point logs");
    sweep->add_option("--epochs", sweep_epochs, "training epochs");

    try {
        app.parse(argc, argv);

        RunConfig cfg = resolve_config(common);
        if (genmesh->parsed()) return cmd_genmesh(cfg, genmesh_out, genmesh_dims, genmesh_taper);
        if (calibrate->parsed()) {
            if (!cal_mesh.empty()) cfg.mesh_path = cal_mesh;
            if (!cal_strategy.empty()) cfg.strategy = cal_strategy;
            if (cal_n) cfg.n = *cal_n;
            if (cfg.n < 1) throw std::invalid_argument("--n must be >= 1");
            return cmd_calibrate(cfg, cal_out,
                                 cal_snr_out.empty() ? cal_out + ".snr.json" : cal_snr_out);
        }
        if (snr->parsed()) return cmd_snr(snr_data, snr_out);
        if (train_cmd->parsed()) {
            if (!train_mesh.empty()) cfg.mesh_path = train_mesh;
            if (train_epochs) cfg.train.epochs = *train_epochs;
            if (train_lr) cfg.train.learning_rate = *train_lr;
            if (train_spacing) cfg.surface_spacing = *train_spacing;
            return cmd_train(cfg, train_data, train_out);
        }
        if (predict_cmd->parsed())
            return cmd_predict(pred_model, pred_values, pred_data, pred_index);
        if (sweep->parsed()) {
            if (!sweep_mesh.empty()) cfg.mesh_path = sweep_mesh;
            if (!sweep_sizes.empty()) cfg.sizes = sweep_sizes;
            if (sweep_replicates) cfg.replicates = *sweep_replicates;
            if (sweep_validation) cfg.validation_size = *sweep_validation;
            if (sweep_epochs) cfg.train.epochs = *sweep_epochs;
            return cmd_sweep(cfg, sweep_out_dir);
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
