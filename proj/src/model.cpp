#include "vda/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vda/adam.hpp"
#include "vda/errors.hpp"

namespace vda {

void ModelConfig::validate() const {
    if (layers < 1 || hidden_dim < 1 || heads < 1 || ffn_dim < 1 || max_len < 1 ||
        num_classes < 1 || vocab_size < 1)
        throw ArgumentError("ModelConfig: all counts must be >= 1");
    if (hidden_dim % heads != 0)
        throw ArgumentError("ModelConfig: hidden_dim must be divisible by heads");
}

namespace {

constexpr double kInitStd = 0.02;
constexpr double kMaskedScore = -1e9;

Tensor init_matrix(std::size_t r, std::size_t c, Rng& rng, double std_dev) {
    Tensor t(r, c);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(std_dev);
    t.set_parameter();
    return t;
}

Tensor init_const(std::size_t n, double v) {
    Tensor t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = v;
    t.set_parameter();
    return t;
}

}  // namespace

Model::Model(const ModelConfig& cfg, uint64_t vocab_hash, Rng& rng)
    : cfg_(cfg), vocab_hash_(vocab_hash) {
    cfg_.validate();
    const std::size_t d = cfg_.hidden_dim, v = cfg_.vocab_size, f = cfg_.ffn_dim;
    tok_emb_ = init_matrix(v, d, rng, kInitStd);
    pos_emb_ = init_matrix(cfg_.max_len, d, rng, kInitStd);
    blocks_.resize(cfg_.layers);
    for (auto& b : blocks_) {
        b.wq = init_matrix(d, d, rng, kInitStd);
        b.bq = init_const(d, 0.0);
        b.wk = init_matrix(d, d, rng, kInitStd);
        b.bk = init_const(d, 0.0);
        b.wv = init_matrix(d, d, rng, kInitStd);
        b.bv = init_const(d, 0.0);
        b.wo = init_matrix(d, d, rng, kInitStd);
        b.bo = init_const(d, 0.0);
        b.ln1_gain = init_const(d, 1.0);
        b.ln1_bias = init_const(d, 0.0);
        b.w1 = init_matrix(d, f, rng, kInitStd);
        b.b1 = init_const(f, 0.0);
        b.w2 = init_matrix(f, d, rng, kInitStd);
        b.b2 = init_const(d, 0.0);
        b.ln2_gain = init_const(d, 1.0);
        b.ln2_bias = init_const(d, 0.0);
    }
    mlm_bias_ = init_const(v, 0.0);
    cls_w_ = init_matrix(d, cfg_.num_classes, rng, kInitStd);
    cls_b_ = init_const(cfg_.num_classes, 0.0);
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out{&tok_emb_, &pos_emb_};
    for (auto& b : blocks_)
        for (Tensor* t : {&b.wq, &b.bq, &b.wk, &b.bk, &b.wv, &b.bv, &b.wo, &b.bo, &b.ln1_gain,
                          &b.ln1_bias, &b.w1, &b.b1, &b.w2, &b.b2, &b.ln2_gain, &b.ln2_bias})
            out.push_back(t);
    out.push_back(&mlm_bias_);
    out.push_back(&cls_w_);
    out.push_back(&cls_b_);
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    auto mut = const_cast<Model*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

std::vector<double> Model::parameter_snapshot() const {
    std::vector<double> out;
    for (const Tensor* t : parameters()) out.insert(out.end(), t->values().begin(), t->values().end());
    return out;
}

void Model::restore_snapshot(const std::vector<double>& snapshot) {
    std::size_t off = 0;
    for (Tensor* t : parameters()) {
        if (off + t->size() > snapshot.size())
            throw ArgumentError("restore_snapshot: snapshot too short");
        std::copy(snapshot.begin() + off, snapshot.begin() + off + t->size(), t->values().begin());
        off += t->size();
    }
    if (off != snapshot.size()) throw ArgumentError("restore_snapshot: snapshot too long");
}

std::size_t Model::strip_trailing_pads(const std::vector<int>& ids) const {
    std::size_t len = ids.size();
    while (len > 0 && ids[len - 1] == kPad) --len;
    return len;
}

Tensor Model::forward_embeddings(const std::vector<int>& ids) const {
    if (ids.size() > static_cast<std::size_t>(cfg_.max_len))
        throw ArgumentError("forward_embeddings: sequence longer than max_len");
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    return add(embedding_lookup(tok_emb_, ids), embedding_lookup(pos_emb_, positions));
}

Tensor Model::encode(const Tensor& embeddings, std::size_t logical_len) const {
    const std::size_t L = embeddings.rows();
    const std::size_t d = cfg_.hidden_dim;
    if (embeddings.cols() != d) throw ArgumentError("encode: embedding width != hidden_dim");
    if (logical_len == 0 || logical_len > L) logical_len = L;

    Tensor mask;
    const bool need_mask = logical_len < L;
    if (need_mask) {
        mask = Tensor(L, L);
        for (std::size_t i = 0; i < L; ++i)
            for (std::size_t j = logical_len; j < L; ++j) mask.at(i, j) = kMaskedScore;
    }

    const std::size_t nh = cfg_.heads, hd = d / nh;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Tensor x = embeddings;
    for (const auto& b : blocks_) {
        Tensor q = add(matmul(x, b.wq), b.bq);
        Tensor k = add(matmul(x, b.wk), b.bk);
        Tensor v = add(matmul(x, b.wv), b.bv);
        std::vector<Tensor> heads;
        heads.reserve(nh);
        for (std::size_t h = 0; h < nh; ++h) {
            Tensor qh = slice_cols(q, h * hd, hd);
            Tensor kh = slice_cols(k, h * hd, hd);
            Tensor vh = slice_cols(v, h * hd, hd);
            Tensor scores = scale(matmul(qh, transpose(kh)), att_scale);
            if (need_mask) scores = add(scores, mask);
            heads.push_back(matmul(softmax(scores), vh));
        }
        Tensor attn = add(matmul(concat_cols(heads), b.wo), b.bo);
        x = add(mul(layer_norm(add(x, attn)), b.ln1_gain), b.ln1_bias);
        Tensor ffn = add(matmul(relu(add(matmul(x, b.w1), b.b1)), b.w2), b.b2);
        x = add(mul(layer_norm(add(x, ffn)), b.ln2_gain), b.ln2_bias);
    }
    return x;
}

Tensor Model::mlm_logits(const std::vector<int>& ids) const {
    ++forward_count_;
    const std::size_t len = strip_trailing_pads(ids);
    Tensor h = encode(forward_embeddings(ids), len);
    return add(matmul(h, transpose(tok_emb_)), mlm_bias_);
}

Tensor Model::classify_from_embeddings(const Tensor& embeddings, std::size_t logical_len) const {
    ++forward_count_;
    Tensor h = encode(embeddings, logical_len);
    return add(matmul(row(h, 0), cls_w_), cls_b_);
}

Tensor Model::classify(const std::vector<int>& ids) const {
    return classify_from_embeddings(forward_embeddings(ids), strip_trailing_pads(ids));
}

// ----------------------------------------------------------- pretraining

namespace {

struct MaskedInput {
    std::vector<int> corrupted;
    std::vector<std::size_t> positions;  // masked positions
};

MaskedInput corrupt(const EncodedExample& ex, int vocab_size, double mask_prob, Rng& rng) {
    MaskedInput out;
    out.corrupted = ex.ids;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ex.ids.size(); ++i)
        if (ex.ids[i] >= kNumSpecials) candidates.push_back(i);
    for (std::size_t i : candidates)
        if (rng.uniform() < mask_prob) out.positions.push_back(i);
    if (out.positions.empty() && !candidates.empty())
        out.positions.push_back(candidates[rng.below(candidates.size())]);
    for (std::size_t i : out.positions) {
        const double r = rng.uniform();
        if (r < 0.8)
            out.corrupted[i] = kMask;
        else if (r < 0.9)
            out.corrupted[i] =
                kNumSpecials + static_cast<int>(rng.below(vocab_size - kNumSpecials));
        // else keep the original token
    }
    return out;
}

}  // namespace

double dev_mlm_loss(const Model& model, const std::vector<EncodedExample>& dev,
                    double mask_prob, Rng rng) {
    double total = 0;
    long count = 0;
    for (const auto& ex : dev) {
        MaskedInput mi = corrupt(ex, model.config().vocab_size, mask_prob, rng);
        if (mi.positions.empty()) continue;
        Tensor logits = model.mlm_logits(mi.corrupted);
        for (std::size_t pos : mi.positions) {
            total += cross_entropy(row(logits, pos), static_cast<std::size_t>(ex.ids[pos])).item();
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

void pretrain_mlm(Model& model, const std::vector<EncodedExample>& train,
                  const PretrainOptions& opts, Rng& rng) {
    if (train.empty()) throw DataError("pretrain_mlm: empty corpus");
    auto params = model.parameters();
    const auto warmup =
        static_cast<std::size_t>(std::ceil(opts.warmup_frac * static_cast<double>(opts.steps)));
    Adam opt(params, opts.lr, warmup);
    for (long step = 0; step < opts.steps; ++step) {
        Tape tape;
        std::vector<Tensor> losses;
        for (int b = 0; b < opts.batch_size; ++b) {
            const auto& ex = train[rng.below(train.size())];
            MaskedInput mi = corrupt(ex, model.config().vocab_size, opts.mask_prob, rng);
            if (mi.positions.empty()) continue;
            Tensor logits = model.mlm_logits(mi.corrupted);
            for (std::size_t pos : mi.positions)
                losses.push_back(cross_entropy(row(logits, pos), static_cast<std::size_t>(ex.ids[pos])));
        }
        if (losses.empty()) continue;
        Tensor total = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
        Tensor loss = scale(total, 1.0 / static_cast<double>(losses.size()));
        if (!std::isfinite(loss.item()))
            throw NumericError("pretrain_mlm: non-finite loss at step " + std::to_string(step));
        backward(loss);
        opt.step();
        ++model.step_counter;
    }
}

// ------------------------------------------------------------ checkpoints

namespace {
constexpr const char* kMagic = "VDA1";
}

void save_checkpoint(const std::string& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open " + path);
    const auto snapshot = model.parameter_snapshot();
    out << kMagic << "\n";
    const auto& c = model.config();
    out << "layers = " << c.layers << "\n";
    out << "hidden_dim = " << c.hidden_dim << "\n";
    out << "heads = " << c.heads << "\n";
    out << "ffn_dim = " << c.ffn_dim << "\n";
    out << "max_len = " << c.max_len << "\n";
    out << "num_classes = " << c.num_classes << "\n";
    out << "vocab_size = " << c.vocab_size << "\n";
    out << "vocab_hash = " << model.vocab_hash() << "\n";
    out << "step = " << model.step_counter << "\n";
    out << "payload " << snapshot.size() << "\n";
    // Parameter order: token embeddings, positional embeddings, per-block
    // [wq bq wk bk wv bv wo bo ln1_gain ln1_bias w1 b1 w2 b2 ln2_gain
    // ln2_bias], mlm bias, classifier weight, classifier bias.
    // Doubles are written little-endian (native on all supported targets).
    out.write(reinterpret_cast<const char*>(snapshot.data()),
              static_cast<std::streamsize>(snapshot.size() * sizeof(double)));
    if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Model load_checkpoint(const std::string& path, uint64_t expected_vocab_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic) throw DataError("load_checkpoint: bad magic in " + path);

    ModelConfig cfg;
    uint64_t vocab_hash = 0;
    long step = 0;
    std::size_t payload = 0;
    std::string line;
    bool saw_payload = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "payload") {
            ls >> payload;
            saw_payload = true;
            break;
        }
        std::string eq;
        ls >> eq;
        if (eq != "=") throw DataError("load_checkpoint: malformed header line: " + line);
        if (key == "layers") ls >> cfg.layers;
        else if (key == "hidden_dim") ls >> cfg.hidden_dim;
        else if (key == "heads") ls >> cfg.heads;
        else if (key == "ffn_dim") ls >> cfg.ffn_dim;
        else if (key == "max_len") ls >> cfg.max_len;
        else if (key == "num_classes") ls >> cfg.num_classes;
        else if (key == "vocab_size") ls >> cfg.vocab_size;
        else if (key == "vocab_hash") ls >> vocab_hash;
        else if (key == "step") ls >> step;
        else throw DataError("load_checkpoint: unknown header key " + key);
    }
    if (!saw_payload) throw DataError("load_checkpoint: missing payload header");
    if (vocab_hash != expected_vocab_hash)
        throw DataError("load_checkpoint: vocab hash mismatch (checkpoint " +
                        std::to_string(vocab_hash) + ", current " +
                        std::to_string(expected_vocab_hash) + ")");

    Rng dummy(0);
    Model model(cfg, vocab_hash, dummy);
    model.step_counter = step;
    std::vector<double> snapshot(payload);
    in.read(reinterpret_cast<char*>(snapshot.data()),
            static_cast<std::streamsize>(payload * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != payload * sizeof(double))
        throw DataError("load_checkpoint: truncated payload in " + path);
    model.restore_snapshot(snapshot);
    return model;
}

}  // namespace vda
