#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aid/array.hpp"
#include "aid/autodiff.hpp"
#include "aid/denoiser.hpp"
#include "aid/diffusion.hpp"
#include "aid/rng.hpp"
#include "aid/schedule.hpp"

namespace aid {

/// Hyperparameters of the toy temporal-spatial-conditioning net. One token
/// per frame: images are flattened (re, im interleaved) and projected to
/// embed_dim, so the causal attention runs across frame positions.
struct TscConfig {
    int image_size = 32;
    int embed_dim = 64;
    int layers = 1;
    int window = 4;        // conditioning token capacity
    int t_steps = 100;     // diffusion steps the time table covers
    int ff_dim = 128;
    bool unconditional = false;  // baseline: conditioning replaced by a zero frame

    int flat_dim() const { return 2 * image_size * image_size; }

    void validate() const {
        if (image_size < 1 || embed_dim < 1 || layers < 1 || window < 1 || t_steps < 1 ||
            ff_dim < 1)
            throw ConfigError("TscConfig: all dimensions must be positive");
    }

    bool operator==(const TscConfig& o) const {
        return image_size == o.image_size && embed_dim == o.embed_dim && layers == o.layers &&
               window == o.window && t_steps == o.t_steps && ff_dim == o.ff_dim &&
               unconditional == o.unconditional;
    }
};

/// Named tensor layout over one flat parameter vector. The registry order is
/// fixed, so the flat vector, serialization, and optimizer state all agree.
struct TensorSpec {
    std::string name;
    int rows = 0, cols = 0;
    size_t offset = 0;
};

class TscNetParams {
public:
    explicit TscNetParams(TscConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        int fd = cfg_.flat_dim(), d = cfg_.embed_dim, f = cfg_.ff_dim;
        reg("embed.w", fd, d);
        reg("embed.pos", cfg_.window, d);
        for (int l = 0; l < cfg_.layers; ++l) {
            std::string p = "block" + std::to_string(l) + ".";
            reg(p + "ln1.g", 1, d);
            reg(p + "ln1.b", 1, d);
            reg(p + "attn.wq", d, d);
            reg(p + "attn.wk", d, d);
            reg(p + "attn.wv", d, d);
            reg(p + "attn.wo", d, d);
            reg(p + "ln2.g", 1, d);
            reg(p + "ln2.b", 1, d);
            reg(p + "ff.w1", d, f);
            reg(p + "ff.b1", 1, f);
            reg(p + "ff.w2", f, d);
            reg(p + "ff.b2", 1, d);
        }
        reg("head.wx", fd, d);
        reg("head.time", cfg_.t_steps, d);
        reg("head.ln.g", 1, d);
        reg("head.ln.b", 1, d);
        reg("head.ff.w1", d, f);
        reg("head.ff.b1", 1, f);
        reg("head.ff.w2", f, d);
        reg("head.ff.b2", 1, d);
        reg("head.lno.g", 1, d);
        reg("head.lno.b", 1, d);
        reg("out.w", d, fd);
        reg("out.b", 1, fd);
        reg("out.gate", 1, cfg_.t_steps);
        flat_.assign(total_, 0.0);
    }

    /// Random init: layer norms at identity, zeroed output projection with
    /// unit pass-through gate, everything else Gaussian scaled by fan-in.
    static TscNetParams init(const TscConfig& cfg, RngStream rng) {
        TscNetParams p(cfg);
        for (const auto& s : p.specs_) {
            double* w = p.flat_.data() + s.offset;
            size_t count = static_cast<size_t>(s.rows) * s.cols;
            if (s.name.find("ln") != std::string::npos) {
                bool is_gain = s.name.back() == 'g';
                for (size_t i = 0; i < count; ++i) w[i] = is_gain ? 1.0 : 0.0;
            } else if (s.name == "out.w" || s.name == "out.b") {
                for (size_t i = 0; i < count; ++i) w[i] = 0.0;
            } else if (s.name == "out.gate") {
                for (size_t i = 0; i < count; ++i) w[i] = 1.0;
            } else if (s.name == "embed.pos" || s.name == "head.time") {
                for (size_t i = 0; i < count; ++i) w[i] = 0.02 * rng.normal();
            } else if (s.name.find(".b") != std::string::npos && s.name.find("ff") != std::string::npos) {
                for (size_t i = 0; i < count; ++i) w[i] = 0.0;
            } else {
                double scale = 1.0 / std::sqrt(static_cast<double>(s.rows));
                for (size_t i = 0; i < count; ++i) w[i] = scale * rng.normal();
            }
        }
        return p;
    }

    const TscConfig& config() const { return cfg_; }
    const std::vector<TensorSpec>& specs() const { return specs_; }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }
    size_t param_count() const { return total_; }

    const TensorSpec& spec(const std::string& name) const {
        for (const auto& s : specs_)
            if (s.name == name) return s;
        throw ArgumentError("TscNetParams: no tensor named " + name);
    }

    Mat tensor(const std::string& name) const {
        const TensorSpec& s = spec(name);
        Mat m(s.rows, s.cols);
        std::copy(flat_.begin() + static_cast<long>(s.offset),
                  flat_.begin() + static_cast<long>(s.offset + m.size()), m.v.begin());
        return m;
    }

    void set_tensor(const std::string& name, const Mat& m) {
        const TensorSpec& s = spec(name);
        if (m.rows != s.rows || m.cols != s.cols)
            throw DimensionError("set_tensor: shape mismatch for " + name);
        std::copy(m.v.begin(), m.v.end(), flat_.begin() + static_cast<long>(s.offset));
    }

    void zero_output_projection() {
        for (const char* n : {"out.w", "out.b", "out.gate"}) {
            const TensorSpec& s = spec(n);
            std::fill(flat_.begin() + static_cast<long>(s.offset),
                      flat_.begin() + static_cast<long>(s.offset +
                                                        static_cast<size_t>(s.rows) * s.cols),
                      0.0);
        }
    }

private:
    void reg(std::string name, int rows, int cols) {
        specs_.push_back(TensorSpec{std::move(name), rows, cols, total_});
        total_ += static_cast<size_t>(rows) * cols;
    }

    TscConfig cfg_;
    std::vector<TensorSpec> specs_;
    std::vector<double> flat_;
    size_t total_ = 0;
};

/// Gradients share the flat layout of the parameters they refer to.
struct ParamGradients {
    std::vector<double> flat;
};

namespace detail {

inline void flatten_into(const ComplexArray2D& img, Mat& m, int row) {
    for (size_t i = 0; i < img.size(); ++i) {
        m.at(row, static_cast<int>(2 * i)) = img[i].real();
        m.at(row, static_cast<int>(2 * i + 1)) = img[i].imag();
    }
}

inline ComplexArray2D unflatten_row(const Mat& m, int row, int n) {
    ComplexArray2D img(n, n);
    for (size_t i = 0; i < img.size(); ++i)
        img[i] = cdouble{m.at(row, static_cast<int>(2 * i)),
                         m.at(row, static_cast<int>(2 * i + 1))};
    return img;
}

/// Leaves for every parameter tensor, in registry order.
struct ParamLeaves {
    std::map<std::string, int> id;
};

inline ParamLeaves make_leaves(Tape& tape, const TscNetParams& params) {
    ParamLeaves leaves;
    for (const auto& s : params.specs()) {
        Mat m(s.rows, s.cols);
        const double* src = params.flat().data() + s.offset;
        std::copy(src, src + m.size(), m.v.begin());
        leaves.id[s.name] = tape.leaf(std::move(m), s.name);
    }
    return leaves;
}

/// Shared forward graph. cond holds the conditioning frames as token rows;
/// noisy/ts give one target row each; h_row[k] names the conditioning row
/// whose summary position k uses. Returns the prediction node (rows match
/// noisy) in `pred`.
inline int tsc_graph(Tape& tape, const ParamLeaves& p, const TscConfig& cfg,
                     const std::vector<const ComplexArray2D*>& cond,
                     const std::vector<const ComplexArray2D*>& noisy,
                     const std::vector<int>& ts, const std::vector<int>& h_row) {
    int m_tokens = static_cast<int>(cond.size());
    int n_targets = static_cast<int>(noisy.size());
    Mat cond_flat(m_tokens, cfg.flat_dim());
    for (int r = 0; r < m_tokens; ++r) flatten_into(*cond[static_cast<size_t>(r)], cond_flat, r);
    Mat noisy_flat(n_targets, cfg.flat_dim());
    for (int r = 0; r < n_targets; ++r) flatten_into(*noisy[static_cast<size_t>(r)], noisy_flat, r);

    std::vector<int> pos_idx(static_cast<size_t>(m_tokens));
    for (int r = 0; r < m_tokens; ++r) pos_idx[static_cast<size_t>(r)] = r;
    std::vector<int> t_idx(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < 1 || ts[i] > cfg.t_steps)
            throw ArgumentError("tsc_forward: step outside the time table");
        t_idx[i] = ts[i] - 1;
    }

    int cond_leaf = tape.leaf(std::move(cond_flat), "cond");
    int noisy_leaf = tape.leaf(std::move(noisy_flat), "noisy");

    auto at = [&](const std::string& n) { return p.id.at(n); };

    int h = tape.add(tape.matmul(cond_leaf, at("embed.w")),
                     tape.row_gather(at("embed.pos"), pos_idx));
    for (int l = 0; l < cfg.layers; ++l) {
        std::string b = "block" + std::to_string(l) + ".";
        int a1 = tape.add_rowvec(tape.mul_rowvec(tape.layernorm(h), at(b + "ln1.g")),
                                 at(b + "ln1.b"));
        int attn = tape.causal_attention(tape.matmul(a1, at(b + "attn.wq")),
                                         tape.matmul(a1, at(b + "attn.wk")),
                                         tape.matmul(a1, at(b + "attn.wv")));
        h = tape.add(h, tape.matmul(attn, at(b + "attn.wo")));
        int f1 = tape.add_rowvec(tape.mul_rowvec(tape.layernorm(h), at(b + "ln2.g")),
                                 at(b + "ln2.b"));
        int ff = tape.add_rowvec(
            tape.matmul(tape.gelu(tape.add_rowvec(tape.matmul(f1, at(b + "ff.w1")),
                                                  at(b + "ff.b1"))),
                        at(b + "ff.w2")),
            at(b + "ff.b2"));
        h = tape.add(h, ff);
    }
    int h_sel = tape.row_gather(h, h_row);

    int z = tape.add(tape.add(tape.matmul(noisy_leaf, at("head.wx")),
                              tape.row_gather(at("head.time"), t_idx)),
                     h_sel);
    int f1 = tape.add_rowvec(tape.mul_rowvec(tape.layernorm(z), at("head.ln.g")),
                             at("head.ln.b"));
    int ff = tape.add_rowvec(
        tape.matmul(tape.gelu(tape.add_rowvec(tape.matmul(f1, at("head.ff.w1")),
                                              at("head.ff.b1"))),
                    at("head.ff.w2")),
        at("head.ff.b2"));
    int zr = tape.add(z, ff);
    int o = tape.add_rowvec(tape.mul_rowvec(tape.layernorm(zr), at("head.lno.g")),
                            at("head.lno.b"));
    int proj = tape.add_rowvec(tape.matmul(o, at("out.w")), at("out.b"));
    int gated = tape.scale_rows_by(noisy_leaf, at("out.gate"), t_idx);
    return tape.add(proj, gated);
}

/// Resolve the conditioning token list and summary row for one position.
inline void single_call_layout(const TscConfig& cfg, const DenoiserContext& ctx,
                               const ComplexArray2D& zero_frame,
                               std::vector<const ComplexArray2D*>& cond, int& h_row) {
    if (cfg.unconditional) {
        cond = {&zero_frame};
        h_row = 0;
        return;
    }
    if (ctx.cond_frames.empty())
        throw ArgumentError("tsc_forward: conditioning requires at least one frame");
    int m = static_cast<int>(ctx.cond_frames.size());
    int start = std::max(0, m - cfg.window);  // newest `window` frames
    for (int i = start; i < m; ++i) cond.push_back(&ctx.cond_frames[static_cast<size_t>(i)]);
    h_row = static_cast<int>(cond.size()) - 1;
}

}  // namespace detail

/// Standalone causal attention on token matrices; same arithmetic as the
/// in-graph op.
inline Mat causal_attention(const Mat& q, const Mat& k, const Mat& v) {
    Tape tape;
    int out = tape.causal_attention(tape.leaf(q), tape.leaf(k), tape.leaf(v));
    return tape.val(out);
}

/// Single-position noise prediction.
inline ComplexArray2D tsc_forward(const TscNetParams& params, const ComplexArray2D& xt, int t,
                                  const DenoiserContext& ctx) {
    const TscConfig& cfg = params.config();
    if (xt.rows() != cfg.image_size || xt.cols() != cfg.image_size)
        throw DimensionError("tsc_forward: image shape does not match the configuration");
    ctx.validate_shapes(xt);
    ComplexArray2D zero(cfg.image_size, cfg.image_size);
    std::vector<const ComplexArray2D*> cond;
    int h_row = 0;
    detail::single_call_layout(cfg, ctx, zero, cond, h_row);

    Tape tape;
    detail::ParamLeaves leaves = detail::make_leaves(tape, params);
    int pred = detail::tsc_graph(tape, leaves, cfg, cond, {&xt}, {t}, {h_row});
    return detail::unflatten_row(tape.val(pred), 0, cfg.image_size);
}

/// DenoiserModel adapter. The parallel path shares the conditioning token
/// pipeline across positions; because attention row i only touches rows
/// <= i, it is bit-identical to per-position single calls.
class TscDenoiser : public DenoiserModel {
public:
    explicit TscDenoiser(TscNetParams params) : params_(std::move(params)) {}

    const TscNetParams& params() const { return params_; }
    TscNetParams& params() { return params_; }

    ComplexArray2D predict_eps(const ComplexArray2D& xt, int t,
                               const DenoiserContext& ctx) const override {
        return tsc_forward(params_, xt, t, ctx);
    }

    std::vector<ComplexArray2D> predict_eps_parallel(
        const std::vector<ComplexArray2D>& noisy, const std::vector<int>& ts,
        const std::vector<ComplexArray2D>& clean) const override {
        const TscConfig& cfg = params_.config();
        if (noisy.size() != ts.size())
            throw DimensionError("predict_eps_parallel: noisy/ts length mismatch");
        if (cfg.unconditional || clean.size() > static_cast<size_t>(cfg.window))
            return DenoiserModel::predict_eps_parallel(noisy, ts, clean);
        if (clean.size() != noisy.size())
            throw DimensionError("predict_eps_parallel: need one clean frame per position");
        std::vector<const ComplexArray2D*> cond, noisy_p;
        std::vector<int> h_row;
        for (size_t i = 0; i < clean.size(); ++i) {
            cond.push_back(&clean[i]);
            noisy_p.push_back(&noisy[i]);
            h_row.push_back(static_cast<int>(i));
        }
        Tape tape;
        detail::ParamLeaves leaves = detail::make_leaves(tape, params_);
        int pred = detail::tsc_graph(tape, leaves, cfg, cond, noisy_p, ts, h_row);
        std::vector<ComplexArray2D> out;
        out.reserve(noisy.size());
        for (size_t i = 0; i < noisy.size(); ++i)
            out.push_back(detail::unflatten_row(tape.val(pred), static_cast<int>(i),
                                                cfg.image_size));
        return out;
    }

private:
    TscNetParams params_;
};

struct GradResult {
    double loss = 0.0;
    std::vector<double> per_sequence;  // loss per batch item, in order
    ParamGradients grads;
};

/// Reverse-mode gradients of the stochastic sequence objective over a batch.
/// Batch item i draws through rng.split(i) with the same per-position
/// protocol as aid_loss, so grad_result.per_sequence[i] equals
/// aid_loss(model, batch[i], sched, rng.split(i)).total bit for bit.
/// Per-item gradients accumulate in batch order.
inline GradResult grad_params(const TscNetParams& params, const std::vector<ImageSequence>& batch,
                              const NoiseSchedule& sched, const RngStream& rng) {
    if (batch.empty()) throw ArgumentError("grad_params: batch must not be empty");
    const TscConfig& cfg = params.config();
    if (sched.steps() != cfg.t_steps)
        throw ConfigError("grad_params: schedule length does not match the time table");
    GradResult res;
    res.grads.flat.assign(params.param_count(), 0.0);

    ComplexArray2D zero(cfg.image_size, cfg.image_size);
    for (size_t item = 0; item < batch.size(); ++item) {
        const ImageSequence& seq = batch[item];
        if (seq.size() < 2)
            throw ArgumentError("grad_params: sequence must hold x_0 plus at least one target");
        int n_targets = static_cast<int>(seq.size()) - 1;
        if (!cfg.unconditional && n_targets > cfg.window)
            throw ConfigError("grad_params: sequence longer than the conditioning window");
        RngStream item_rng = rng.split(item);

        std::vector<ComplexArray2D> noisy_store, eps_store;
        std::vector<int> ts;
        for (int n = 1; n <= n_targets; ++n) {
            RngStream s = item_rng.split(static_cast<std::uint64_t>(n));
            int t = static_cast<int>(s.uniform_int(1, static_cast<std::uint64_t>(sched.steps())));
            ComplexArray2D e = s.normal_array(cfg.image_size, cfg.image_size);
            noisy_store.push_back(q_sample(seq[static_cast<size_t>(n)], t, e, sched));
            eps_store.push_back(std::move(e));
            ts.push_back(t);
        }
        std::vector<const ComplexArray2D*> cond, noisy_p;
        std::vector<int> h_row;
        for (int n = 0; n < n_targets; ++n) {
            cond.push_back(cfg.unconditional ? &zero : &seq[static_cast<size_t>(n)]);
            noisy_p.push_back(&noisy_store[static_cast<size_t>(n)]);
            h_row.push_back(cfg.unconditional ? 0 : n);
        }
        if (cfg.unconditional) cond.resize(1);

        Tape tape;
        detail::ParamLeaves leaves = detail::make_leaves(tape, params);
        int pred = detail::tsc_graph(tape, leaves, cfg, cond, noisy_p, ts, h_row);
        Mat target(n_targets, cfg.flat_dim());
        for (int n = 0; n < n_targets; ++n)
            detail::flatten_into(eps_store[static_cast<size_t>(n)], target, n);
        int loss_node = tape.sum_sq_diff(pred, std::move(target));
        double loss = tape.val(loss_node).at(0, 0);
        tape.backward(loss_node);

        for (const auto& s : params.specs()) {
            const Mat& g = tape.grad_of(leaves.id.at(s.name));
            double* dst = res.grads.flat.data() + s.offset;
            for (size_t i = 0; i < g.size(); ++i) dst[i] += g.v[i];
        }
        res.per_sequence.push_back(loss);
        res.loss += loss;
    }
    return res;
}

}  // namespace aid
