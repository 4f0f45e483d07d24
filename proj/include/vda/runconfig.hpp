#pragma once

#include <string>

#include "vda/attack.hpp"
#include "vda/model.hpp"
#include "vda/trainer.hpp"

namespace vda {

// Flat `key = value` experiment configuration. Unknown keys are rejected by
// name; every field has a documented default.
struct RunConfig {
    // model
    int layers = 2;
    int hidden_dim = 64;
    int heads = 2;
    int ffn_dim = 128;
    int max_len = 32;
    int num_classes = 2;

    // training
    double lambda = 1.0;
    double lr = 1e-4;
    int epochs = 3;
    int batch_size = 16;
    double warmup_frac = 0.05;
    std::string reg_loss = "sym_kl";  // sym_kl | ce_on_label
    bool per_draw_steps = false;

    // augmentation
    double sigma = 1e-2;
    int k = 1;
    std::string mode = "mixture";  // mixture | argmax | sample
    bool protect_specials = true;
    std::string mixture_matrix = "classifier";  // classifier | frozen_mlm
    double temperature = 1.0;

    // attack
    int top_k_candidates = 8;
    double max_perturb_frac = 0.4;
    int sample_size = 1000;

    // pretraining
    long pretrain_steps = 2000;
    int pretrain_batch = 8;
    double mask_prob = 0.15;
    double pretrain_lr = 1e-3;

    // data / misc
    int vocab_max_size = 4096;
    int min_freq = 1;
    int train_size = 8000;
    int dev_size = 1000;
    int test_size = 1000;
    uint64_t seed = 42;
    int epoch_attack_sample = 0;  // per-epoch attack subsample during training; 0 = off

    void set(const std::string& key, const std::string& value);
    static RunConfig from_file(const std::string& path);
    void merge_file(const std::string& path);
    std::string to_string() const;  // echoable `key = value` form
    void write_echo(const std::string& path) const;

    ModelConfig model_config(int vocab_size) const;
    TrainConfig train_config() const;
    AugmentConfig augment_config() const;
    AttackConfig attack_config() const;
    PretrainOptions pretrain_options() const;
    CorpusSpec corpus_spec() const;
};

}  // namespace vda
