#include "vda/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "vda/errors.hpp"

namespace vda {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for " + key + ": " + v);
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const long r = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for " + key + ": " + v);
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for " + key + ": " + v);
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw DataError("config: bad number for " + key + ": " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw DataError("config: bad boolean for " + key + ": " + v);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "layers") layers = to_int(key, value);
    else if (key == "hidden_dim") hidden_dim = to_int(key, value);
    else if (key == "heads") heads = to_int(key, value);
    else if (key == "ffn_dim") ffn_dim = to_int(key, value);
    else if (key == "max_len") max_len = to_int(key, value);
    else if (key == "num_classes") num_classes = to_int(key, value);
    else if (key == "lambda") lambda = to_double(key, value);
    else if (key == "lr") lr = to_double(key, value);
    else if (key == "epochs") epochs = to_int(key, value);
    else if (key == "batch_size") batch_size = to_int(key, value);
    else if (key == "warmup_frac") warmup_frac = to_double(key, value);
    else if (key == "reg_loss") reg_loss = value;
    else if (key == "per_draw_steps") per_draw_steps = to_bool(key, value);
    else if (key == "sigma") sigma = to_double(key, value);
    else if (key == "k") k = to_int(key, value);
    else if (key == "mode") mode = value;
    else if (key == "protect_specials") protect_specials = to_bool(key, value);
    else if (key == "mixture_matrix") mixture_matrix = value;
    else if (key == "temperature") temperature = to_double(key, value);
    else if (key == "top_k_candidates") top_k_candidates = to_int(key, value);
    else if (key == "max_perturb_frac") max_perturb_frac = to_double(key, value);
    else if (key == "sample_size") sample_size = to_int(key, value);
    else if (key == "pretrain_steps") pretrain_steps = to_long(key, value);
    else if (key == "pretrain_batch") pretrain_batch = to_int(key, value);
    else if (key == "mask_prob") mask_prob = to_double(key, value);
    else if (key == "pretrain_lr") pretrain_lr = to_double(key, value);
    else if (key == "vocab_max_size") vocab_max_size = to_int(key, value);
    else if (key == "min_freq") min_freq = to_int(key, value);
    else if (key == "train_size") train_size = to_int(key, value);
    else if (key == "dev_size") dev_size = to_int(key, value);
    else if (key == "test_size") test_size = to_int(key, value);
    else if (key == "seed") seed = to_u64(key, value);
    else if (key == "epoch_attack_sample") epoch_attack_sample = to_int(key, value);
    else throw DataError("config: unknown key: " + key);
}

void RunConfig::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected key = value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    cfg.merge_file(path);
    return cfg;
}

std::string RunConfig::to_string() const {
    std::ostringstream o;
    o << "layers = " << layers << "\n";
    o << "hidden_dim = " << hidden_dim << "\n";
    o << "heads = " << heads << "\n";
    o << "ffn_dim = " << ffn_dim << "\n";
    o << "max_len = " << max_len << "\n";
    o << "num_classes = " << num_classes << "\n";
    o << "lambda = " << lambda << "\n";
    o << "lr = " << lr << "\n";
    o << "epochs = " << epochs << "\n";
    o << "batch_size = " << batch_size << "\n";
    o << "warmup_frac = " << warmup_frac << "\n";
    o << "reg_loss = " << reg_loss << "\n";
    o << "per_draw_steps = " << (per_draw_steps ? "true" : "false") << "\n";
    o << "sigma = " << sigma << "\n";
    o << "k = " << k << "\n";
    o << "mode = " << mode << "\n";
    o << "protect_specials = " << (protect_specials ? "true" : "false") << "\n";
    o << "mixture_matrix = " << mixture_matrix << "\n";
    o << "temperature = " << temperature << "\n";
    o << "top_k_candidates = " << top_k_candidates << "\n";
    o << "max_perturb_frac = " << max_perturb_frac << "\n";
    o << "sample_size = " << sample_size << "\n";
    o << "pretrain_steps = " << pretrain_steps << "\n";
    o << "pretrain_batch = " << pretrain_batch << "\n";
    o << "mask_prob = " << mask_prob << "\n";
    o << "pretrain_lr = " << pretrain_lr << "\n";
    o << "vocab_max_size = " << vocab_max_size << "\n";
    o << "min_freq = " << min_freq << "\n";
    o << "train_size = " << train_size << "\n";
    o << "dev_size = " << dev_size << "\n";
    o << "test_size = " << test_size << "\n";
    o << "seed = " << seed << "\n";
    o << "epoch_attack_sample = " << epoch_attack_sample << "\n";
    return o.str();
}

void RunConfig::write_echo(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << to_string();
}

ModelConfig RunConfig::model_config(int vocab_size) const {
    ModelConfig c;
    c.layers = layers;
    c.hidden_dim = hidden_dim;
    c.heads = heads;
    c.ffn_dim = ffn_dim;
    c.max_len = max_len;
    c.num_classes = num_classes;
    c.vocab_size = vocab_size;
    return c;
}

AugmentConfig RunConfig::augment_config() const {
    AugmentConfig c;
    c.sigma = sigma;
    c.k = k;
    if (mode == "mixture") c.mode = AugmentMode::kMixture;
    else if (mode == "argmax") c.mode = AugmentMode::kArgmax;
    else if (mode == "sample") c.mode = AugmentMode::kSample;
    else throw DataError("config: mode must be mixture|argmax|sample, got " + mode);
    c.protect_specials = protect_specials;
    if (mixture_matrix == "classifier") c.mixture_matrix = MixtureMatrix::kClassifier;
    else if (mixture_matrix == "frozen_mlm") c.mixture_matrix = MixtureMatrix::kFrozenMlm;
    else throw DataError("config: mixture_matrix must be classifier|frozen_mlm, got " + mixture_matrix);
    c.temperature = temperature;
    return c;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig c;
    c.lambda = lambda;
    c.lr = lr;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.warmup_frac = warmup_frac;
    if (reg_loss == "sym_kl") c.reg_loss = RegLoss::kSymKl;
    else if (reg_loss == "ce_on_label") c.reg_loss = RegLoss::kCeOnLabel;
    else throw DataError("config: reg_loss must be sym_kl|ce_on_label, got " + reg_loss);
    c.augment = augment_config();
    c.seed = seed;
    c.per_draw_steps = per_draw_steps;
    return c;
}

AttackConfig RunConfig::attack_config() const {
    AttackConfig c;
    c.top_k_candidates = top_k_candidates;
    c.max_perturb_frac = max_perturb_frac;
    c.sample_size = sample_size;
    c.seed = seed;
    return c;
}

PretrainOptions RunConfig::pretrain_options() const {
    PretrainOptions o;
    o.steps = pretrain_steps;
    o.batch_size = pretrain_batch;
    o.mask_prob = mask_prob;
    o.lr = pretrain_lr;
    o.warmup_frac = warmup_frac;
    return o;
}

CorpusSpec RunConfig::corpus_spec() const {
    CorpusSpec s;
    s.train_size = train_size;
    s.dev_size = dev_size;
    s.test_size = test_size;
    return s;
}

}  // namespace vda
