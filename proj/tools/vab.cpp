// Command-line surface: train, eval, baseline, sweep, and the
// vendor/consumer encode/classify round trip. Emits CSV rows ready for
// plotting accuracy and PSNR against BPP.
//
// Exit codes: 0 success, 1 usage/config errors, 2 data errors,
// 3 model/data dimension mismatch, 4 unknown baseline method,
// 5 code-file header mismatch.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vab/vab.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDim = 3;
constexpr int kExitMethod = 4;
constexpr int kExitCodeHeader = 5;

struct CommonFlags {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::string split = "test";
    std::size_t subset = 0; // 0 = all rows
};

std::string resolve_data_dir(const vab::RunConfig& cfg, const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (!cfg.data_dir.empty()) return cfg.data_dir;
    if (const char* env = std::getenv("VAB_DATA_DIR"); env && *env) return env;
    return "data";
}

vab::Dataset load_split(const std::string& dir, const std::string& split, std::size_t subset) {
    if (split != "train" && split != "test")
        throw vab::InputError("split must be 'train' or 'test', got '" + split + "'");
    vab::Dataset data = vab::load_mnist_split(dir, split == "train");
    if (subset != 0 && subset < data.size()) {
        vab::Tensor images({subset, data.images.cols()});
        std::copy_n(data.images.data.begin(), images.numel(), images.data.begin());
        data.images = std::move(images);
        data.labels.resize(subset);
    }
    return data;
}

/// The model-side pipeline: binarize, then optionally pad onto the 32x32
/// canvas. Raw [0,1] pixels stay untouched for the baselines.
vab::Tensor prepare_images(const vab::Tensor& images, const vab::TrainConfig& t) {
    vab::Tensor binary =
        vab::binarize(images,
                      t.stochastic_binarize ? vab::BinarizeMode::Stochastic
                                            : vab::BinarizeMode::Threshold,
                      t.binarize_threshold, t.seed);
    return t.pad ? vab::pad_to_1024(binary) : binary;
}

std::size_t true_class_count(const std::vector<int>& labels) {
    int mx = 0;
    for (int l : labels) mx = std::max(mx, l);
    return static_cast<std::size_t>(mx) + 1;
}

constexpr const char* kTraceCsvHeader = "epoch,elbo,acc,psnr_db,lr,tau,wall_seconds";

std::string trace_row(const vab::EpochStats& s) {
    std::string out = std::to_string(s.epoch);
    out += ',';
    out += vab::format_real(s.elbo);
    out += ',';
    out += vab::format_real(s.acc);
    out += ',';
    out += vab::format_real(s.psnr_db);
    out += ',';
    out += vab::format_real(s.lr);
    out += ',';
    out += vab::format_real(s.tau);
    out += ',';
    out += vab::format_real(s.seconds);
    return out;
}

struct TrainOutcome {
    vab::Checkpoint checkpoint;
    std::string checkpoint_path;
    bool aborted = false;
    double wall_seconds = 0.0;
    double final_elbo = 0.0;
};

/// Shared by cmd_train and cmd_sweep: load + preprocess the train split,
/// run the trainer, stream the trace CSV, save the checkpoint.
TrainOutcome run_training(vab::RunConfig cfg, const std::string& data_dir,
                          const std::string& checkpoint_path, const std::string& trace_path,
                          bool quiet) {
    vab::Dataset data = load_split(data_dir, "train", cfg.train_subset);
    data.images = prepare_images(data.images, cfg.train);
    cfg.train.input_dim = data.dim();
    cfg.train.validate();

    if (!trace_path.empty()) {
        std::error_code ec;
        std::filesystem::remove(trace_path, ec);
    }
    auto t0 = std::chrono::steady_clock::now();
    double last_elbo = 0.0;
    auto on_epoch = [&](const vab::EpochStats& s) {
        last_elbo = s.elbo;
        if (!trace_path.empty())
            vab::append_csv_line(trace_path, kTraceCsvHeader, trace_row(s));
        if (!quiet)
            std::cout << "epoch " << s.epoch << " elbo " << s.elbo << " acc " << s.acc
                      << " psnr " << s.psnr_db << " tau " << s.tau << " (" << s.seconds
                      << "s)\n"
                      << std::flush;
    };

    vab::TrainResult result = vab::train(cfg.train, data, on_epoch);
    TrainOutcome out;
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.aborted = result.aborted;
    out.final_elbo = last_elbo;
    vab::save_checkpoint(result.checkpoint, checkpoint_path);
    out.checkpoint = std::move(result.checkpoint);
    out.checkpoint_path = checkpoint_path;
    if (result.aborted)
        std::cerr << "training aborted (" << result.abort_reason
                  << "); checkpoint holds the last completed epoch\n";
    return out;
}

vab::RunReport evaluate_checkpoint(const vab::Checkpoint& ckpt, const vab::Dataset& test,
                                   double wall_seconds) {
    const vab::TrainConfig& c = ckpt.config;
    std::vector<int> pred = vab::assign_clusters_chunked(ckpt.params, test.images);
    vab::RunReport r;
    r.dim_z = c.dim_z;
    r.bpp = vab::bpp(c.dim_z, c.pixels_per_image);
    r.seed = c.seed;
    r.epochs = ckpt.epoch;
    r.acc = vab::clustering_acc(pred, test.labels, c.num_clusters,
                                true_class_count(test.labels));
    r.psnr_db = vab::mean_psnr(ckpt.params, test.images);
    std::size_t total = c.pretrain_epochs + c.epochs;
    double tau_final = vab::temperature(c, total == 0 ? 0 : total - 1);
    r.elbo = vab::dataset_elbo(ckpt.params, test.images, tau_final, c.seed);
    r.wall_seconds = wall_seconds;
    return r;
}

int cmd_train(const CommonFlags& common, vab::RunConfig& cfg, std::string checkpoint_path,
              std::string trace_path, bool quiet) {
    std::string data_dir = resolve_data_dir(cfg, common.data_dir);
    std::string out_dir = common.out_dir.empty() ? cfg.out_dir : common.out_dir;
    std::filesystem::create_directories(out_dir);
    std::string tag = "dz" + std::to_string(cfg.train.dim_z) + "_seed" +
                      std::to_string(cfg.train.seed);
    if (checkpoint_path.empty()) checkpoint_path = out_dir + "/vab_" + tag + ".ckpt";
    if (trace_path.empty()) trace_path = out_dir + "/trace_" + tag + ".csv";

    TrainOutcome out = run_training(cfg, data_dir, checkpoint_path, trace_path, quiet);
    std::cout << "checkpoint: " << out.checkpoint_path << "\ntrace: " << trace_path << "\n";
    return out.aborted ? kExitUsage : 0;
}

int cmd_eval(const CommonFlags& common, const std::string& checkpoint_path,
             std::string results_path) {
    vab::Checkpoint ckpt = vab::load_checkpoint(checkpoint_path);
    vab::RunConfig cfg;
    cfg.train = ckpt.config;
    std::string data_dir = resolve_data_dir(cfg, common.data_dir);
    std::string out_dir = common.out_dir.empty() ? cfg.out_dir : common.out_dir;

    vab::Dataset data = load_split(data_dir, common.split, common.subset);
    data.images = prepare_images(data.images, ckpt.config);
    if (data.dim() != ckpt.config.input_dim) {
        std::cerr << "data dim " << data.dim() << " does not match checkpoint input_dim "
                  << ckpt.config.input_dim << "\n";
        return kExitDim;
    }

    auto t0 = std::chrono::steady_clock::now();
    vab::RunReport r = evaluate_checkpoint(ckpt, data, 0.0);
    r.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(out_dir);
    if (results_path.empty()) results_path = out_dir + "/results.csv";
    vab::append_run_report(results_path, r);
    std::cout << vab::kRunCsvHeader << "\n" << vab::to_csv_row(r) << "\n";
    return 0;
}

constexpr const char* kBaselineCsvHeader = "method,k,seed,acc,acc_mean,acc_stderr,wall_seconds";

int cmd_baseline(const CommonFlags& common, vab::RunConfig& cfg, const std::string& method,
                 std::size_t k, std::size_t seeds, std::uint64_t seed0, std::size_t max_iter,
                 std::string out_path) {
    if (method != "kmeans" && method != "gmm") {
        std::cerr << "unknown baseline method '" << method << "' (expected kmeans or gmm)\n";
        return kExitMethod;
    }
    std::string data_dir = resolve_data_dir(cfg, common.data_dir);
    std::string out_dir = common.out_dir.empty() ? cfg.out_dir : common.out_dir;
    std::filesystem::create_directories(out_dir);
    if (out_path.empty()) out_path = out_dir + "/baselines.csv";

    vab::Dataset data = load_split(data_dir, common.split, common.subset);
    std::size_t k_true = true_class_count(data.labels);

    std::vector<double> accs;
    for (std::size_t s = 0; s < seeds; ++s) {
        std::uint64_t seed = seed0 + s;
        auto t0 = std::chrono::steady_clock::now();
        std::vector<int> pred;
        if (method == "kmeans") {
            vab::KMeansModel model = vab::kmeans_fit(data.images, k, seed, max_iter);
            pred = vab::kmeans_predict(model, data.images);
        } else {
            vab::GmmModel model = vab::gmm_fit(data.images, k, seed, max_iter);
            pred = vab::gmm_predict(model, data.images);
        }
        double acc = vab::clustering_acc(pred, data.labels, k, k_true);
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        accs.push_back(acc);
        std::string row = method + "," + std::to_string(k) + "," + std::to_string(seed) +
                          "," + vab::format_real(acc) + ",,," + vab::format_real(secs);
        vab::append_csv_line(out_path, kBaselineCsvHeader, row);
        std::cout << method << " seed " << seed << " acc " << acc << " (" << secs << "s)\n"
                  << std::flush;
    }
    vab::MeanStderr ms = vab::mean_stderr(accs);
    double best = *std::max_element(accs.begin(), accs.end());
    std::string row = method + "," + std::to_string(k) + ",best," + vab::format_real(best) +
                      "," + vab::format_real(ms.mean) + "," + vab::format_real(ms.stderr_) +
                      ",";
    vab::append_csv_line(out_path, kBaselineCsvHeader, row);
    std::cout << method << " best " << best << " mean " << ms.mean << " stderr "
              << ms.stderr_ << "\n";
    return 0;
}

constexpr const char* kSweepSummaryHeader =
    "dim_z,bpp,seeds,acc_mean,acc_stderr,acc_best,psnr_mean,psnr_stderr,elbo_mean";

int cmd_sweep(const CommonFlags& common, vab::RunConfig cfg,
              const std::vector<std::size_t>& dims, std::size_t seeds, std::uint64_t seed0,
              bool quiet) {
    if (dims.empty()) {
        std::cerr << "sweep needs a non-empty dim_z list\n";
        return kExitUsage;
    }
    std::string data_dir = resolve_data_dir(cfg, common.data_dir);
    std::string out_dir = common.out_dir.empty() ? cfg.out_dir : common.out_dir;
    std::filesystem::create_directories(out_dir);
    std::string results_path = out_dir + "/results.csv";
    std::string summary_path = out_dir + "/sweep_summary.csv";

    vab::Dataset test = load_split(data_dir, "test", common.subset);
    bool all_ok = true;
    for (std::size_t dim : dims) {
        std::vector<double> accs, psnrs, elbos;
        for (std::size_t s = 0; s < seeds; ++s) {
            vab::RunConfig run = cfg;
            run.train.dim_z = dim;
            run.train.seed = seed0 + s;
            std::string tag =
                "dz" + std::to_string(dim) + "_seed" + std::to_string(run.train.seed);
            try {
                TrainOutcome out =
                    run_training(run, data_dir, out_dir + "/vab_" + tag + ".ckpt",
                                 out_dir + "/trace_" + tag + ".csv", quiet);
                if (out.aborted) {
                    all_ok = false;
                    continue;
                }
                vab::Dataset prepared = test;
                prepared.images = prepare_images(test.images, out.checkpoint.config);
                vab::RunReport r =
                    evaluate_checkpoint(out.checkpoint, prepared, out.wall_seconds);
                vab::append_run_report(results_path, r);
                std::cout << vab::to_csv_row(r) << "\n" << std::flush;
                accs.push_back(r.acc);
                psnrs.push_back(r.psnr_db);
                elbos.push_back(r.elbo);
            } catch (const std::exception& e) {
                all_ok = false;
                std::cerr << "run " << tag << " failed: " << e.what() << "\n";
            }
        }
        if (accs.empty()) continue;
        vab::MeanStderr am = vab::mean_stderr(accs);
        vab::MeanStderr pm = vab::mean_stderr(psnrs);
        vab::MeanStderr em = vab::mean_stderr(elbos);
        double best = *std::max_element(accs.begin(), accs.end());
        std::string row = std::to_string(dim) + "," +
                          vab::format_real(vab::bpp(dim, cfg.train.pixels_per_image)) + "," +
                          std::to_string(accs.size()) + "," + vab::format_real(am.mean) +
                          "," + vab::format_real(am.stderr_) + "," + vab::format_real(best) +
                          "," + vab::format_real(pm.mean) + "," + vab::format_real(pm.stderr_) +
                          "," + vab::format_real(em.mean);
        vab::append_csv_line(summary_path, kSweepSummaryHeader, row);
    }
    std::cout << "results: " << results_path << "\nsummary: " << summary_path << "\n";
    return all_ok ? 0 : kExitUsage;
}

int cmd_encode(const CommonFlags& common, const std::string& checkpoint_path,
               std::string out_path) {
    vab::Checkpoint ckpt = vab::load_checkpoint(checkpoint_path);
    vab::RunConfig cfg;
    cfg.train = ckpt.config;
    std::string data_dir = resolve_data_dir(cfg, common.data_dir);
    std::string out_dir = common.out_dir.empty() ? cfg.out_dir : common.out_dir;

    vab::Dataset data = load_split(data_dir, common.split, common.subset);
    data.images = prepare_images(data.images, ckpt.config);
    if (data.dim() != ckpt.config.input_dim) {
        std::cerr << "data dim " << data.dim() << " does not match checkpoint input_dim "
                  << ckpt.config.input_dim << "\n";
        return kExitDim;
    }

    vab::CodeFile file;
    file.dim_z = static_cast<std::uint32_t>(ckpt.config.dim_z);
    const std::size_t chunk = 1000;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        std::size_t count = std::min(chunk, data.size() - start);
        vab::Tensor block({count, data.dim()});
        std::copy_n(data.images.data.begin() + start * data.dim(), count * data.dim(),
                    block.data.begin());
        vab::Tensor bits = vab::harden_means(vab::encode(ckpt.params, block));
        for (std::size_t i = 0; i < count; ++i) {
            vab::LatentCode code;
            code.dim = ckpt.config.dim_z;
            code.bits.resize(code.dim);
            for (std::size_t j = 0; j < code.dim; ++j)
                code.bits[j] = bits(i, j) >= 0.5 ? 1 : 0;
            file.append(code);
        }
    }

    std::filesystem::create_directories(out_dir);
    if (out_path.empty()) out_path = out_dir + "/codes.vabc";
    vab::save_code_file(file, out_path);
    std::cout << "codes: " << out_path << " (" << file.count << " records, "
              << 16 + file.payload.size() << " bytes)\n";
    return 0;
}

int cmd_classify(const std::string& checkpoint_path, const std::string& codes_path,
                 const std::string& out_path) {
    vab::Checkpoint ckpt = vab::load_checkpoint(checkpoint_path);
    vab::CodeFile file;
    try {
        file = vab::load_code_file(codes_path);
    } catch (const vab::FormatError& e) {
        std::cerr << "code file: " << e.what() << "\n";
        return kExitCodeHeader;
    }
    if (file.dim_z != ckpt.config.dim_z) {
        std::cerr << "code file dim_z " << file.dim_z << " does not match checkpoint dim_z "
                  << ckpt.config.dim_z << "\n";
        return kExitCodeHeader;
    }

    std::ostream* out = &std::cout;
    std::ofstream file_out;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::trunc);
        if (!file_out) throw vab::InputError("cannot open for writing: " + out_path);
        out = &file_out;
    }
    const std::size_t chunk = 1000;
    for (std::size_t start = 0; start < file.count; start += chunk) {
        std::size_t count = std::min<std::size_t>(chunk, file.count - start);
        vab::Tensor block({count, file.dim_z});
        for (std::size_t i = 0; i < count; ++i) {
            vab::LatentCode code = file.record(start + i);
            for (std::size_t j = 0; j < code.dim; ++j)
                block(i, j) = code.bits[j] ? 1.0 : 0.0;
        }
        vab::Tensor gamma = vab::cluster_posterior(ckpt.params.mixture, block);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < gamma.cols(); ++c)
                if (gamma(i, c) > gamma(i, best)) best = c;
            *out << best << "\n";
        }
    }
    if (!out_path.empty()) std::cout << "ids: " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Joint lossy compression and clustering with a Bernoulli-latent VAE "
        "under a Bernoulli-mixture prior.\n"
        "Exit codes: 0 ok, 1 usage/config, 2 data, 3 dimension mismatch, "
        "4 unknown method, 5 code-file header mismatch."};
    app.require_subcommand(1);

    CommonFlags common;
    vab::RunConfig cfg;
    std::string checkpoint_path, trace_path, results_path, out_path, codes_path;
    std::string method = "kmeans";
    std::vector<std::size_t> dims{10, 16, 28, 64};
    std::size_t k = 10, seeds = 10, max_iter = 100, sweep_seeds = 3;
    std::uint64_t seed0 = 1;
    bool quiet = false;

    // Flags bind to optionals and are applied after the config file, so the
    // precedence is defaults < --config < --set < explicit flags.
    std::optional<std::size_t> f_dim_z, f_num_clusters, f_epochs, f_batch, f_pretrain,
        f_train_subset, f_eval_every;
    std::optional<std::uint64_t> f_seed;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub, bool with_split) {
        sub->add_option("--config", common.config_path, "key=value config file");
        sub->add_option("--data-dir", common.data_dir,
                        "IDX data directory (default: $VAB_DATA_DIR or ./data)");
        sub->add_option("--out-dir", common.out_dir, "output directory");
        sub->add_option("--set", overrides,
                        "config override key=value (repeatable, wins over --config)");
        if (with_split) {
            sub->add_option("--split", common.split, "data split: train or test");
            sub->add_option("--subset", common.subset, "use only the first N rows (0 = all)");
        }
    };

    CLI::App* train = app.add_subcommand("train", "train a model, write checkpoint + trace");
    add_common(train, false);
    train->add_option("--dim-z", f_dim_z, "latent width");
    train->add_option("--num-clusters", f_num_clusters, "mixture components");
    train->add_option("--epochs", f_epochs, "training epochs");
    train->add_option("--batch-size", f_batch, "minibatch size");
    train->add_option("--seed", f_seed, "training seed");
    train->add_option("--pretrain-epochs", f_pretrain, "mixture-free warmup epochs");
    train->add_option("--train-subset", f_train_subset,
                      "train on only the first N rows (0 = all)");
    train->add_option("--eval-every", f_eval_every,
                      "train ACC/PSNR cadence in the trace (0 = never)");
    train->add_option("--checkpoint", checkpoint_path, "checkpoint output path");
    train->add_option("--trace", trace_path, "trace CSV output path");
    train->add_flag("--quiet", quiet, "suppress per-epoch stdout lines");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint, append a CSV row");
    add_common(eval, true);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint to evaluate")->required();
    eval->add_option("--out", results_path, "results CSV path");

    CLI::App* baseline = app.add_subcommand("baseline", "k-means / GMM on raw pixels");
    add_common(baseline, true);
    baseline->add_option("--method", method, "kmeans or gmm")->required();
    baseline->add_option("--k", k, "number of clusters");
    baseline->add_option("--seeds", seeds, "number of seeds");
    baseline->add_option("--seed0", seed0, "first seed value");
    baseline->add_option("--max-iter", max_iter, "iteration cap");
    baseline->add_option("--out", out_path, "baseline CSV path");

    CLI::App* sweep = app.add_subcommand("sweep", "train+eval across latent widths");
    add_common(sweep, true);
    sweep->add_option("--dims", dims, "latent widths to sweep");
    sweep->add_option("--seeds", sweep_seeds, "seeds per width");
    sweep->add_option("--seed0", seed0, "first seed value");
    sweep->add_option("--epochs", f_epochs, "training epochs per run");
    sweep->add_option("--train-subset", f_train_subset,
                      "train on only the first N rows (0 = all)");
    sweep->add_flag("--quiet", quiet, "suppress per-epoch stdout lines");

    CLI::App* encode = app.add_subcommand("encode", "vendor side: images to code file");
    add_common(encode, true);
    encode->add_option("--checkpoint", checkpoint_path, "checkpoint to encode with")
        ->required();
    encode->add_option("--out", out_path, "code file path");

    CLI::App* classify = app.add_subcommand("classify", "consumer side: code file to ids");
    classify->add_option("--checkpoint", checkpoint_path, "checkpoint holding the mixture")
        ->required();
    classify->add_option("--codes", codes_path, "code file from encode")->required();
    classify->add_option("--out", out_path, "ids output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (!common.config_path.empty()) vab::load_config_file(cfg, common.config_path);
        for (const std::string& kv : overrides) {
            std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw vab::ConfigError("--set expects key=value, got '" + kv + "'");
            vab::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (f_dim_z) cfg.train.dim_z = *f_dim_z;
        if (f_num_clusters) cfg.train.num_clusters = *f_num_clusters;
        if (f_epochs) cfg.train.epochs = *f_epochs;
        if (f_batch) cfg.train.batch_size = *f_batch;
        if (f_seed) cfg.train.seed = *f_seed;
        if (f_pretrain) cfg.train.pretrain_epochs = *f_pretrain;
        if (f_train_subset) cfg.train_subset = *f_train_subset;
        if (f_eval_every) cfg.train.eval_every = *f_eval_every;

        if (train->parsed())
            return cmd_train(common, cfg, checkpoint_path, trace_path, quiet);
        if (eval->parsed()) return cmd_eval(common, checkpoint_path, results_path);
        if (baseline->parsed())
            return cmd_baseline(common, cfg, method, k, seeds, seed0, max_iter, out_path);
        if (sweep->parsed())
            return cmd_sweep(common, cfg, dims, sweep_seeds, seed0, quiet);
        if (encode->parsed()) return cmd_encode(common, checkpoint_path, out_path);
        if (classify->parsed()) return cmd_classify(checkpoint_path, codes_path, out_path);
    } catch (const vab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const vab::DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return kExitDim;
    } catch (const vab::TruncationError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const vab::FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const vab::InputError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const vab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
