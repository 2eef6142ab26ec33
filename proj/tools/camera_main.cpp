// camera: train, score and evaluate the unsupervised fraud detector.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "camera/config.hpp"
#include "camera/errors.hpp"
#include "camera/io.hpp"
#include "camera/manifest.hpp"
#include "camera/model.hpp"
#include "camera/scoring.hpp"
#include "camera/synthgen.hpp"
#include "camera/training.hpp"

namespace fs = std::filesystem;
using namespace camera;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::map<std::string, std::string> snapshot(const std::string& config_text) {
    return KeyValueFile::parse_string(config_text).values;
}

ModelOptions parse_model_options(const std::string& experts, const std::string& gating,
                                 const std::string& moe) {
    ModelOptions opt;
    if (!experts.empty()) {
        opt.expert_mask = {false, false, false};
        std::istringstream ss(experts);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "graph")
                opt.expert_mask[kExpertGraph] = true;
            else if (item == "semantic")
                opt.expert_mask[kExpertSemantic] = true;
            else if (item == "global")
                opt.expert_mask[kExpertGlobal] = true;
            else
                throw ConfigError("--experts: unknown expert '" + item + "'");
        }
        if (opt.enabled_expert_count() == 0) throw ConfigError("--experts: empty expert set");
    }
    if (gating == "context")
        opt.gating_mode = GatingMode::ContextInformed;
    else if (gating == "ego")
        opt.gating_mode = GatingMode::EgoOnly;
    else if (gating == "uniform")
        opt.gating_mode = GatingMode::Uniform;
    else
        throw ConfigError("--gating: expected context, ego or uniform");
    if (moe == "ego-decoupled")
        opt.mode = MoeMode::EgoDecoupled;
    else if (moe == "standard")
        opt.mode = MoeMode::StandardMoe;
    else
        throw ConfigError("--moe: expected ego-decoupled or standard");
    return opt;
}

std::string options_string(const ModelOptions& opt) {
    std::string experts;
    for (int k = 0; k < kNumExperts; ++k)
        if (opt.expert_mask[k]) {
            if (!experts.empty()) experts += ",";
            experts += expert_name(k);
        }
    std::string gating = opt.gating_mode == GatingMode::ContextInformed ? "context"
                         : opt.gating_mode == GatingMode::EgoOnly      ? "ego"
                                                                       : "uniform";
    std::string moe = opt.mode == MoeMode::EgoDecoupled ? "ego-decoupled" : "standard";
    return "experts=" + experts + " gating=" + gating + " moe=" + moe;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir, long long seed_override) {
    SynthConfig config = config_path.empty() ? SynthConfig{}
                                             : parse_synth_config(KeyValueFile::parse(config_path));
    if (seed_override >= 0) config.seed = std::uint64_t(seed_override);
    const Dataset ds = generate(config);
    fs::create_directories(out_dir);
    save_dataset(ds, out_dir);

    RunManifest m;
    m.command = "generate";
    m.created_utc = utc_timestamp();
    m.seed = config.seed;
    m.config = snapshot(synth_config_to_string(config));
    m.add_output(out_dir, "edges.txt");
    m.add_output(out_dir, "embeddings.bin");
    m.add_output(out_dir, "labels.txt");
    save_manifest(m, fs::path(out_dir) / "manifest.json");
    std::cout << "generated " << ds.graph.num_nodes << " nodes, " << ds.graph.num_edges
              << " edges, " << ds.labels.fraud_count() << " fraud -> " << out_dir << "\n";
    return kExitOk;
}

template <typename Real>
void run_train(const Dataset& ds, const TrainConfig& config, const ModelOptions& options,
               const fs::path& out_dir) {
    const std::size_t hidden =
        config.hidden_dim ? config.hidden_dim : std::max<std::size_t>(1, ds.features.dim / 4);
    MoeModel<Real> model =
        init_model<Real>(ds.features.dim, hidden, config.num_layers, config.seed, options);
    const TrainReport report = train(ds, model, config);
    save_checkpoint(model, out_dir / "checkpoint.bin");
    write_train_report(report, out_dir / "train_report.txt");
    const auto& last = report.epochs.back().loss;
    std::cout << "epoch " << report.epochs.size() << ": l_expert=" << last.l_expert
              << " l_gating=" << last.l_gating << " l_oc=" << last.l_oc << " l_total=" << last.l_total
              << "\n";
}

int cmd_train(const std::string& data_dir, const std::string& config_path, const std::string& preset,
              const std::string& out_dir, const std::string& experts, const std::string& gating,
              const std::string& moe, long long seed_override, long long epochs_override,
              double lr_override, double alpha_override, double beta_override, bool use_f64) {
    TrainConfig config = preset.empty() ? TrainConfig{} : preset_train_config(preset);
    if (!config_path.empty()) {
        // preset supplies defaults; the config file overrides on top of them
        KeyValueFile kv = KeyValueFile::parse(config_path);
        TrainConfig base = config;
        config = parse_train_config(kv);
        if (!kv.has("epochs")) config.epochs = base.epochs;
        if (!kv.has("learning_rate")) config.learning_rate = base.learning_rate;
        if (!kv.has("alpha")) config.alpha = base.alpha;
        if (!kv.has("beta")) config.beta = base.beta;
    }
    if (seed_override >= 0) config.seed = std::uint64_t(seed_override);
    if (epochs_override > 0) config.epochs = std::size_t(epochs_override);
    if (lr_override > 0) config.learning_rate = lr_override;
    if (alpha_override >= 0) config.alpha = alpha_override;
    if (beta_override >= 0) config.beta = beta_override;
    config.validate();

    const ModelOptions options = parse_model_options(experts, gating, moe);
    const Dataset ds = load_dataset(data_dir);
    fs::create_directories(out_dir);
    if (use_f64)
        run_train<double>(ds, config, options, out_dir);
    else
        run_train<float>(ds, config, options, out_dir);

    RunManifest m;
    m.command = "train";
    m.created_utc = utc_timestamp();
    m.seed = config.seed;
    m.config = snapshot(train_config_to_string(config));
    m.config["model_options"] = options_string(options);
    m.config["precision"] = use_f64 ? "f64" : "f32";
    m.config["data_dir"] = data_dir;
    m.inputs["embeddings.bin"] = file_checksum(fs::path(data_dir) / "embeddings.bin");
    m.inputs["edges.txt"] = file_checksum(fs::path(data_dir) / "edges.txt");
    m.add_output(out_dir, "checkpoint.bin");
    save_manifest(m, fs::path(out_dir) / "manifest.json");
    return kExitOk;
}

int cmd_score(const std::string& checkpoint, const std::string& data_dir, const std::string& out_path) {
    const Dataset ds = load_dataset(data_dir);
    const AnyModel any = load_checkpoint(checkpoint);
    std::visit(
        [&](const auto& model) {
            const auto trace = model_forward(model, ds.graph, ds.features);
            const ScoredDataset scored = score_nodes(trace);
            write_scores(scored.scores, out_path);
            std::cout << "scored " << scored.scores.size() << " nodes -> " << out_path << "\n";
        },
        any);

    RunManifest m;
    m.command = "score";
    m.created_utc = utc_timestamp();
    m.config["checkpoint"] = checkpoint;
    m.config["data_dir"] = data_dir;
    m.inputs["checkpoint.bin"] = file_checksum(checkpoint);
    m.outputs[fs::path(out_path).filename().string()] = file_checksum(out_path);
    save_manifest(m, out_path + ".manifest.json");
    return kExitOk;
}

int cmd_eval(const std::vector<std::string>& score_paths, const std::string& labels_path) {
    const LabelVector labels = read_labels(labels_path);
    std::vector<MetricResult> results;
    for (const auto& path : score_paths) results.push_back(evaluate(read_scores(path), labels));

    if (results.size() == 1) {
        const auto& r = results[0];
        std::printf("auroc=%.6f\nauprc=%.6f\npositives=%zu\nnegatives=%zu\n", r.auroc, r.auprc,
                    r.positives, r.negatives);
        return kExitOk;
    }
    double am = 0, pm = 0;
    for (const auto& r : results) {
        am += r.auroc / double(results.size());
        pm += r.auprc / double(results.size());
    }
    double av = 0, pv = 0;
    for (const auto& r : results) {
        av += (r.auroc - am) * (r.auroc - am) / double(results.size());
        pv += (r.auprc - pm) * (r.auprc - pm) / double(results.size());
    }
    for (std::size_t i = 0; i < results.size(); ++i)
        std::printf("file%zu: auroc=%.6f auprc=%.6f\n", i, results[i].auroc, results[i].auprc);
    std::printf("auroc_mean=%.6f\nauroc_std=%.6f\nauprc_mean=%.6f\nauprc_std=%.6f\nruns=%zu\n", am,
                std::sqrt(av), pm, std::sqrt(pv), results.size());
    return kExitOk;
}

int cmd_inspect_gating(const std::string& checkpoint, const std::string& data_dir, bool per_node) {
    const Dataset ds = load_dataset(data_dir);
    const AnyModel any = load_checkpoint(checkpoint);
    std::visit(
        [&](const auto& model) {
            const auto trace = model_forward(model, ds.graph, ds.features);
            for (std::size_t l = 0; l < trace.layers.size(); ++l) {
                const auto& gates = trace.layers[l].gating;
                double mean[kNumExperts] = {0, 0, 0};
                for (std::size_t i = 0; i < gates.rows; ++i)
                    for (int k = 0; k < kNumExperts; ++k)
                        mean[k] += double(gates.at(i, k)) / double(gates.rows);
                std::printf("layer=%zu graph=%.6f semantic=%.6f global=%.6f\n", l + 1, mean[0],
                            mean[1], mean[2]);
            }
            if (per_node) {
                std::printf("# node layer graph semantic global\n");
                for (std::size_t l = 0; l < trace.layers.size(); ++l) {
                    const auto& gates = trace.layers[l].gating;
                    for (std::size_t i = 0; i < gates.rows; ++i)
                        std::printf("%zu %zu %.6f %.6f %.6f\n", i, l + 1, double(gates.at(i, 0)),
                                    double(gates.at(i, 1)), double(gates.at(i, 2)));
                }
            }
        },
        any);
    return kExitOk;
}

int cmd_sweep(const std::string& grid_path, const std::string& data_dir, const std::string& out_dir,
              bool use_f64) {
    const SweepGrid grid = parse_sweep_grid(KeyValueFile::parse(grid_path));
    const Dataset ds = load_dataset(data_dir);
    if (!ds.labels.present) throw DataError("sweep: labels.txt required in data dir for evaluation");
    fs::create_directories(out_dir);

    struct Row {
        double alpha, beta, auroc, auprc;
    };
    std::vector<Row> rows;
    for (const auto& [alpha, beta] : grid.cells()) {
        char cell_name[64];
        std::snprintf(cell_name, sizeof cell_name, "cell_a%g_b%g", alpha, beta);
        const fs::path cell_dir = fs::path(out_dir) / cell_name;
        const fs::path cell_manifest = cell_dir / "manifest.json";

        TrainConfig config = grid.base;
        config.alpha = alpha;
        config.beta = beta;

        if (verify_manifest_outputs(cell_manifest)) {
            std::cout << cell_name << ": verified, skipping\n";
        } else {
            fs::create_directories(cell_dir);
            const ModelOptions options;
            if (use_f64)
                run_train<double>(ds, config, options, cell_dir);
            else
                run_train<float>(ds, config, options, cell_dir);
            std::visit(
                [&](const auto& model) {
                    const auto trace = model_forward(model, ds.graph, ds.features);
                    write_scores(score_nodes(trace).scores, cell_dir / "scores.txt");
                },
                load_checkpoint(cell_dir / "checkpoint.bin"));

            RunManifest m;
            m.command = "sweep-cell";
            m.created_utc = utc_timestamp();
            m.seed = config.seed;
            m.config = snapshot(train_config_to_string(config));
            m.add_output(cell_dir, "checkpoint.bin");
            m.add_output(cell_dir, "scores.txt");
            save_manifest(m, cell_manifest);
        }

        const MetricResult r = evaluate(read_scores(cell_dir / "scores.txt"), ds.labels);
        rows.push_back({alpha, beta, r.auroc, r.auprc});
    }

    const fs::path table_path = fs::path(out_dir) / "sweep_results.txt";
    std::ofstream table(table_path);
    table << "# alpha beta auroc auprc\n";
    for (const auto& row : rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%g %g %.6f %.6f\n", row.alpha, row.beta, row.auroc, row.auprc);
        table << buf;
        std::cout << buf;
    }
    table.close();

    RunManifest m;
    m.command = "sweep";
    m.created_utc = utc_timestamp();
    m.seed = grid.base.seed;
    m.config = snapshot(train_config_to_string(grid.base));
    m.add_output(out_dir, "sweep_results.txt");
    save_manifest(m, fs::path(out_dir) / "manifest.json");
    return kExitOk;
}

int cmd_embed(const std::string& texts_path, const std::string& out_path, const std::string& endpoint,
              const std::string& model_name, std::size_t batch_size, const std::string& auth_env) {
    const auto records = read_jsonl_texts(texts_path);
    EmbeddingServiceConfig config;
    config.endpoint_url = endpoint;
    config.model_name = model_name;
    config.batch_size = batch_size;
    config.auth_token_env = auth_env;
    const FeatureMatrix m = fetch_embeddings(records, config);
    write_embeddings(m, out_path);
    std::cout << "embedded " << m.num_rows << " texts (dim " << m.dim << ") -> " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAMERA: unsupervised fraud detection on text-attributed graphs"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic camouflage benchmark");
    std::string gen_config, gen_out;
    long long gen_seed = -1;
    gen->add_option("--config", gen_config, "synth config file (key = value)");
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--seed", gen_seed, "seed override");

    // train
    auto* tr = app.add_subcommand("train", "Train the detector on a dataset directory");
    std::string tr_data, tr_config, tr_preset, tr_out, tr_experts, tr_gating = "context",
                                                                   tr_moe = "ego-decoupled";
    long long tr_seed = -1, tr_epochs = -1;
    double tr_lr = -1, tr_alpha = -1, tr_beta = -1;
    bool tr_f64 = false;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--config", tr_config, "train config file");
    tr->add_option("--preset", tr_preset, "named preset: reddit, instagram, amazonvideo, yelpchi");
    tr->add_option("--out", tr_out, "output run directory")->required();
    tr->add_option("--experts", tr_experts, "comma list of enabled experts (default all)");
    tr->add_option("--gating", tr_gating, "context|ego|uniform");
    tr->add_option("--moe", tr_moe, "ego-decoupled|standard");
    tr->add_option("--seed", tr_seed, "seed override");
    tr->add_option("--epochs", tr_epochs, "epoch override");
    tr->add_option("--lr", tr_lr, "learning-rate override");
    tr->add_option("--alpha", tr_alpha, "gating-loss weight override");
    tr->add_option("--beta", tr_beta, "OC-loss weight override");
    tr->add_flag("--f64", tr_f64, "train in double precision");

    // score
    auto* sc = app.add_subcommand("score", "Score nodes with a trained checkpoint");
    std::string sc_ckpt, sc_data, sc_out;
    sc->add_option("--checkpoint", sc_ckpt, "checkpoint file")->required();
    sc->add_option("--data", sc_data, "dataset directory")->required();
    sc->add_option("--out", sc_out, "scores output file")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate scores against labels");
    std::string ev_scores, ev_labels;
    std::vector<std::string> ev_multi;
    ev->add_option("--scores", ev_scores, "scores file");
    ev->add_option("--multi", ev_multi, "several scores files (mean +- std)")->expected(-1);
    ev->add_option("--labels", ev_labels, "labels file")->required();

    // inspect-gating
    auto* ig = app.add_subcommand("inspect-gating", "Dump per-layer expert gating weights");
    std::string ig_ckpt, ig_data;
    bool ig_per_node = false;
    ig->add_option("--checkpoint", ig_ckpt, "checkpoint file")->required();
    ig->add_option("--data", ig_data, "dataset directory")->required();
    ig->add_flag("--per-node", ig_per_node, "emit the full per-node table");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Grid search over alpha x beta");
    std::string sw_grid, sw_data, sw_out;
    bool sw_f64 = false;
    sw->add_option("--grid", sw_grid, "grid config file (alphas/betas lists + base train keys)")
        ->required();
    sw->add_option("--data", sw_data, "dataset directory (labels required)")->required();
    sw->add_option("--out", sw_out, "sweep output directory")->required();
    sw->add_flag("--f64", sw_f64, "train in double precision");

    // embed
    auto* em = app.add_subcommand("embed", "Fetch embeddings for a JSONL corpus from a service");
    std::string em_texts, em_out, em_endpoint, em_model = "text-embedding-3-small", em_auth;
    std::size_t em_batch = 16;
    em->add_option("--texts", em_texts, "JSONL corpus file")->required();
    em->add_option("--out", em_out, "embeddings output file")->required();
    em->add_option("--endpoint", em_endpoint, "service URL")->required();
    em->add_option("--model", em_model, "service model name");
    em->add_option("--batch-size", em_batch, "texts per request");
    em->add_option("--auth-env", em_auth, "env var holding the bearer token");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(gen_config, gen_out, gen_seed);
        if (tr->parsed())
            return cmd_train(tr_data, tr_config, tr_preset, tr_out, tr_experts, tr_gating, tr_moe,
                             tr_seed, tr_epochs, tr_lr, tr_alpha, tr_beta, tr_f64);
        if (sc->parsed()) return cmd_score(sc_ckpt, sc_data, sc_out);
        if (ev->parsed()) {
            std::vector<std::string> paths = ev_multi;
            if (!ev_scores.empty()) paths.insert(paths.begin(), ev_scores);
            if (paths.empty()) throw ConfigError("eval: provide --scores or --multi");
            return cmd_eval(paths, ev_labels);
        }
        if (ig->parsed()) return cmd_inspect_gating(ig_ckpt, ig_data, ig_per_node);
        if (sw->parsed()) return cmd_sweep(sw_grid, sw_data, sw_out, sw_f64);
        if (em->parsed()) return cmd_embed(em_texts, em_out, em_endpoint, em_model, em_batch, em_auth);
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
