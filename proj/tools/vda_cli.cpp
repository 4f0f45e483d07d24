// Command-line front end: corpus generation, MLM pretraining, baseline/VDA
// fine-tuning, evaluation, black-box attack and hyperparameter sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vda/attack.hpp"
#include "vda/augment.hpp"
#include "vda/errors.hpp"
#include "vda/model.hpp"
#include "vda/runconfig.hpp"
#include "vda/textio.hpp"
#include "vda/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

vda::RunConfig resolve_config(const CommonArgs& args) {
    vda::RunConfig cfg;
    if (!args.config_path.empty()) cfg.merge_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw vda::DataError("--set expects key=value, got " + kv);
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        };
        trim(key);
        trim(val);
        cfg.set(key, val);
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (key = value lines)");
    cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set sigma=0.01");
}

struct Dataset {
    vda::Vocab vocab;
    std::vector<vda::EncodedExample> train, dev, test;
};

Dataset load_dataset(const std::string& dir, const vda::RunConfig& cfg,
                     const std::string& extra_train = "") {
    Dataset d;
    d.vocab = vda::Vocab::load(dir + "/vocab.txt");
    d.train = vda::load_jsonl(dir + "/train.jsonl", d.vocab, cfg.max_len);
    d.dev = vda::load_jsonl(dir + "/dev.jsonl", d.vocab, cfg.max_len);
    d.test = vda::load_jsonl(dir + "/test.jsonl", d.vocab, cfg.max_len);
    if (!extra_train.empty()) {
        auto extra = vda::load_jsonl(extra_train, d.vocab, cfg.max_len);
        d.train.insert(d.train.end(), extra.begin(), extra.end());
        std::cerr << "added " << extra.size() << " extra training examples from " << extra_train
                  << "\n";
    }
    return d;
}

vda::Model load_model(const std::string& path, const vda::Vocab& vocab) {
    if (!fs::exists(path)) throw vda::IoError("checkpoint not found: " + path);
    return vda::load_checkpoint(path, vocab.hash());
}

int cmd_synth(const CommonArgs& common, const std::string& out_dir, bool force) {
    vda::RunConfig cfg = resolve_config(common);
    if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
        if (!force) {
            std::cerr << "error: output dir " << out_dir << " exists; use --force to overwrite\n";
            return 1;
        }
    }
    vda::generate_synthetic_corpus(cfg.seed, cfg.corpus_spec(), out_dir);

    auto train_raw = vda::load_jsonl_raw(out_dir + "/train.jsonl");
    std::vector<std::string> texts;
    long positives = 0;
    for (const auto& ex : train_raw) {
        texts.push_back(ex.text_a);
        positives += ex.label == 1;
    }
    vda::Vocab vocab = vda::build_vocab(texts, cfg.vocab_max_size, cfg.min_freq);
    vocab.save(out_dir + "/vocab.txt");
    cfg.write_echo(out_dir + "/run.config");

    std::cout << "wrote " << out_dir << "/{train,dev,test}.jsonl and vocab.txt (V=" << vocab.size()
              << ")\n";
    std::cout << "train class balance: " << positives << "/" << train_raw.size() << " positive\n";
    return 0;
}

int cmd_pretrain(const CommonArgs& common, const std::string& data_dir, const std::string& out) {
    vda::RunConfig cfg = resolve_config(common);
    Dataset d = load_dataset(data_dir, cfg);
    vda::Rng rng(cfg.seed);
    vda::Model model(cfg.model_config(d.vocab.size()), d.vocab.hash(), rng);
    const double loss0 = vda::dev_mlm_loss(model, d.dev, cfg.mask_prob, vda::Rng(cfg.seed ^ 0xDEF));
    vda::pretrain_mlm(model, d.train, cfg.pretrain_options(), rng);
    const double loss1 = vda::dev_mlm_loss(model, d.dev, cfg.mask_prob, vda::Rng(cfg.seed ^ 0xDEF));
    vda::save_checkpoint(out, model);
    cfg.write_echo(out + ".config");
    std::cout << "dev MLM loss " << loss0 << " -> " << loss1 << " after " << cfg.pretrain_steps
              << " steps; checkpoint " << out << "\n";
    return 0;
}

json metrics_json(const vda::EpochMetrics& em) {
    json j{{"epoch", em.epoch},
           {"train_loss", em.train_loss},
           {"L_c", em.classification_loss},
           {"L_reg", em.regularization_loss},
           {"dev_accuracy", em.dev_accuracy}};
    if (em.dev_attack_accuracy) j["dev_attack_accuracy"] = *em.dev_attack_accuracy;
    return j;
}

void apply_ablation(vda::RunConfig& cfg, const std::string& ablation) {
    if (ablation == "vda-noeps") cfg.sigma = 0.0;
    else if (ablation == "cevda") cfg.reg_loss = "ce_on_label";
    else if (ablation == "argmax") cfg.mode = "argmax";
    else if (ablation == "sample") cfg.mode = "sample";
    else if (!ablation.empty())
        throw vda::DataError("unknown ablation: " + ablation +
                             " (expected vda-noeps|cevda|argmax|sample)");
}

int cmd_train(const CommonArgs& common, const std::string& data_dir, const std::string& mlm_path,
              const std::string& out, const std::string& vda_flag, const std::string& ablation,
              const std::string& extra_data, const std::string& metrics_path, bool explicit_lambda) {
    vda::RunConfig cfg = resolve_config(common);
    apply_ablation(cfg, ablation);
    if (vda_flag != "on" && vda_flag != "off")
        throw vda::DataError("--vda must be on or off");
    if (vda_flag == "off") {
        if (explicit_lambda && cfg.lambda > 0)
            throw vda::DataError("config conflict: lambda > 0 with --vda off");
        cfg.lambda = 0.0;
        if (!ablation.empty()) throw vda::DataError("config conflict: --ablation with --vda off");
    }

    Dataset d = load_dataset(data_dir, cfg, extra_data);
    vda::Model f_mlm = load_model(mlm_path, d.vocab);
    // f starts from the same pretrained weights; deep copy so f_mlm stays
    // frozen while f trains.
    vda::Model f = load_model(mlm_path, d.vocab);

    std::ofstream metrics;
    if (!metrics_path.empty()) {
        metrics.open(metrics_path);
        if (!metrics) throw vda::IoError("cannot open metrics file " + metrics_path);
    }

    std::function<void(vda::Model&, vda::EpochMetrics&)> hook;
    if (cfg.epoch_attack_sample > 0) {
        hook = [&](vda::Model& m, vda::EpochMetrics& em) {
            vda::AttackConfig ac = cfg.attack_config();
            ac.sample_size = std::min<int>(cfg.epoch_attack_sample,
                                           static_cast<int>(d.dev.size()));
            vda::Victim victim(m);
            em.dev_attack_accuracy = vda::evaluate_robustness(victim, f_mlm, d.dev, ac).att_acc;
        };
    }

    vda::TrainResult result = vda::train(f, f_mlm, d.train, d.dev, cfg.train_config(), hook);
    for (const auto& em : result.metrics)
        if (metrics.is_open()) metrics << metrics_json(em).dump() << "\n";

    const double test_acc = vda::evaluate(f, d.test);
    json summary{{"best_epoch", result.best_epoch},
                 {"best_dev_accuracy", result.best_dev_accuracy},
                 {"test_accuracy", test_acc}};
    if (metrics.is_open()) metrics << summary.dump() << "\n";
    std::cout << summary.dump() << "\n";

    vda::save_checkpoint(out, f);
    cfg.write_echo(out + ".config");
    return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& data_dir, const std::string& ckpt,
             const std::string& split) {
    vda::RunConfig cfg = resolve_config(common);
    Dataset d = load_dataset(data_dir, cfg);
    vda::Model model = load_model(ckpt, d.vocab);
    const auto& set = split == "train" ? d.train : split == "dev" ? d.dev : d.test;
    std::cout << json{{"split", split}, {"accuracy", vda::evaluate(model, set)}}.dump() << "\n";
    return 0;
}

int cmd_attack(const CommonArgs& common, const std::string& data_dir, const std::string& ckpt,
               const std::string& mlm_path, const std::string& report_path,
               const std::string& export_path, const std::string& split) {
    vda::RunConfig cfg = resolve_config(common);
    Dataset d = load_dataset(data_dir, cfg);
    vda::Model model = load_model(ckpt, d.vocab);
    vda::Model f_mlm = load_model(mlm_path, d.vocab);
    const auto& set = split == "train" ? d.train : split == "dev" ? d.dev : d.test;

    vda::AttackConfig ac = cfg.attack_config();
    ac.sample_size = std::min<int>(ac.sample_size, static_cast<int>(set.size()));
    vda::Victim victim(model);
    std::vector<vda::AttackResult> results;
    vda::RobustnessReport report = vda::evaluate_robustness(victim, f_mlm, set, ac, &results);

    json j{{"ori_acc", report.ori_acc},
           {"att_acc", report.att_acc},
           // Averaged over all attacked examples, not only successes.
           {"avg_queries", report.avg_queries},
           // Averaged over successful attacks only.
           {"avg_perturb_pct", report.avg_perturb_pct},
           {"sample_size", report.sample_size},
           {"split", split}};
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw vda::IoError("cannot open report file " + report_path);
        out << j.dump(2) << "\n";
        cfg.write_echo(report_path + ".config");
    }
    std::cout << j.dump() << "\n";

    if (!export_path.empty()) {
        vda::export_adversarial(results, set, d.vocab, export_path);
        long successes = 0;
        for (const auto& r : results) successes += r.success;
        std::cout << "exported " << successes << " adversarial examples to " << export_path << "\n";
    }
    return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& data_dir, const std::string& mlm_path,
              const std::string& param, const std::vector<double>& values,
              const std::string& out_csv) {
    if (values.empty()) throw vda::DataError("sweep: values must be nonempty");
    if (param != "sigma" && param != "k" && param != "lambda")
        throw vda::DataError("sweep: param must be sigma|k|lambda");

    vda::RunConfig base = resolve_config(common);
    Dataset d = load_dataset(data_dir, base);
    vda::Model f_mlm = load_model(mlm_path, d.vocab);

    std::ofstream csv(out_csv);
    if (!csv) throw vda::IoError("cannot open " + out_csv);
    csv << param << ",ori_acc,att_acc\n";

    for (double value : values) {
        vda::RunConfig cfg = base;
        if (param == "sigma") cfg.sigma = value;
        else if (param == "k") cfg.k = static_cast<int>(value);
        else cfg.lambda = value;

        vda::Model f = load_model(mlm_path, d.vocab);
        vda::train(f, f_mlm, d.train, d.dev, cfg.train_config());

        vda::AttackConfig ac = cfg.attack_config();
        ac.sample_size = std::min<int>(ac.sample_size, static_cast<int>(d.test.size()));
        vda::Victim victim(f);
        vda::RobustnessReport report = vda::evaluate_robustness(victim, f_mlm, d.test, ac);
        csv << value << "," << report.ori_acc << "," << report.att_acc << "\n";
        csv.flush();
        std::cout << param << "=" << value << " ori_acc=" << report.ori_acc
                  << " att_acc=" << report.att_acc << "\n";
    }
    base.write_echo(out_csv + ".config");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual data augmentation for robust text-classifier fine-tuning"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string out_dir = "data", out = "model.ckpt", data_dir = "data";
    std::string mlm_path = "mlm.ckpt", ckpt = "model.ckpt";
    std::string vda_flag = "on", ablation, extra_data, metrics_path;
    std::string report_path, export_path, split = "test";
    std::string sweep_param = "sigma";
    std::vector<double> sweep_values;
    bool force = false;

    auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
    add_common(synth, common);
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_flag("--force", force, "Overwrite an existing output directory");

    auto* pretrain = app.add_subcommand("pretrain", "Pretrain the masked language model");
    add_common(pretrain, common);
    pretrain->add_option("--data", data_dir, "Corpus directory")->required();
    pretrain->add_option("--out", out, "Checkpoint path")->required();

    auto* train = app.add_subcommand("train", "Fine-tune a classifier (baseline or VDA)");
    add_common(train, common);
    train->add_option("--data", data_dir, "Corpus directory")->required();
    train->add_option("--mlm", mlm_path, "Pretrained MLM checkpoint")->required();
    train->add_option("--out", out, "Output checkpoint path")->required();
    train->add_option("--vda", vda_flag, "on|off (off = vanilla fine-tuning)");
    train->add_option("--ablation", ablation, "vda-noeps|cevda|argmax|sample");
    train->add_option("--extra-data", extra_data, "Extra JSONL appended to the training set");
    train->add_option("--metrics", metrics_path, "Per-epoch metrics JSONL output");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval, common);
    eval->add_option("--data", data_dir)->required();
    eval->add_option("--ckpt", ckpt)->required();
    eval->add_option("--split", split, "train|dev|test");

    auto* attack = app.add_subcommand("attack", "Run the black-box attack and report metrics");
    add_common(attack, common);
    attack->add_option("--data", data_dir)->required();
    attack->add_option("--ckpt", ckpt, "Victim checkpoint")->required();
    attack->add_option("--mlm", mlm_path, "MLM checkpoint (candidate source)")->required();
    attack->add_option("--report", report_path, "Robustness report JSON output");
    attack->add_option("--export", export_path, "Adversarial-example JSONL export");
    attack->add_option("--split", split, "train|dev|test");

    auto* sweep = app.add_subcommand("sweep", "Train+attack across one hyperparameter");
    add_common(sweep, common);
    sweep->add_option("--data", data_dir)->required();
    sweep->add_option("--mlm", mlm_path)->required();
    sweep->add_option("--param", sweep_param, "sigma|k|lambda")->required();
    sweep->add_option("--values", sweep_values, "Values to sweep")->required();
    sweep->add_option("--out", out, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(common, out_dir, force);
        if (pretrain->parsed()) return cmd_pretrain(common, data_dir, out);
        if (train->parsed()) {
            bool explicit_lambda = false;
            for (const auto& kv : common.overrides)
                if (kv.rfind("lambda", 0) == 0) explicit_lambda = true;
            if (!common.config_path.empty()) {
                std::ifstream in(common.config_path);
                std::string line;
                while (std::getline(in, line))
                    if (line.find("lambda") != std::string::npos &&
                        line.find('=') != std::string::npos)
                        explicit_lambda = true;
            }
            return cmd_train(common, data_dir, mlm_path, out, vda_flag, ablation, extra_data,
                             metrics_path, explicit_lambda);
        }
        if (eval->parsed()) return cmd_eval(common, data_dir, ckpt, split);
        if (attack->parsed())
            return cmd_attack(common, data_dir, ckpt, mlm_path, report_path, export_path, split);
        if (sweep->parsed())
            return cmd_sweep(common, data_dir, mlm_path, sweep_param, sweep_values, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
