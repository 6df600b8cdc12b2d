#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "aid/errors.hpp"

namespace aid {

/// Dense row-major real matrix for the differentiator.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
};

/// Reverse-mode tape over a fixed op set: matmul, adds, row broadcasts,
/// layer norm, GELU, causal attention, row gather/scale, squared loss.
/// Every op validates shapes and scans its output for non-finite values so a
/// diverging computation names the op that produced it.
class Tape {
public:
    int leaf(Mat m, std::string name = "leaf") {
        return push(std::move(m), std::move(name), {});
    }

    int matmul(int a, int b) {
        const Mat &A = val(a), &B = val(b);
        if (A.cols != B.rows) throw DimensionError("matmul: inner dims disagree");
        Mat C(A.rows, B.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < B.cols; ++j) {
                double acc = 0.0;
                for (int k = 0; k < A.cols; ++k) acc += A.at(i, k) * B.at(k, j);
                C.at(i, j) = acc;
            }
        int id = push(std::move(C), "matmul", {a, b});
        nodes_[static_cast<size_t>(id)].back = [this, a, b, id]() {
            const Mat &A = val(a), &B = val(b), &dC = grad_of(id);
            Mat& dA = grad_of(a);
            Mat& dB = grad_of(b);
            for (int i = 0; i < A.rows; ++i)
                for (int k = 0; k < A.cols; ++k) {
                    double acc = 0.0;
                    for (int j = 0; j < B.cols; ++j) acc += dC.at(i, j) * B.at(k, j);
                    dA.at(i, k) += acc;
                }
            for (int k = 0; k < B.rows; ++k)
                for (int j = 0; j < B.cols; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < A.rows; ++i) acc += A.at(i, k) * dC.at(i, j);
                    dB.at(k, j) += acc;
                }
        };
        return id;
    }

    int add(int a, int b) {
        const Mat &A = val(a), &B = val(b);
        if (A.rows != B.rows || A.cols != B.cols) throw DimensionError("add: shape mismatch");
        Mat C = A;
        for (size_t i = 0; i < C.size(); ++i) C.v[i] += B.v[i];
        int id = push(std::move(C), "add", {a, b});
        nodes_[static_cast<size_t>(id)].back = [this, a, b, id]() {
            const Mat& dC = grad_of(id);
            Mat &dA = grad_of(a), &dB = grad_of(b);
            for (size_t i = 0; i < dC.size(); ++i) {
                dA.v[i] += dC.v[i];
                dB.v[i] += dC.v[i];
            }
        };
        return id;
    }

    /// A (n x d) plus row vector b (1 x d) broadcast over rows.
    int add_rowvec(int a, int b) {
        const Mat &A = val(a), &B = val(b);
        if (B.rows != 1 || B.cols != A.cols) throw DimensionError("add_rowvec: bad bias shape");
        Mat C = A;
        for (int r = 0; r < C.rows; ++r)
            for (int c = 0; c < C.cols; ++c) C.at(r, c) += B.at(0, c);
        int id = push(std::move(C), "add_rowvec", {a, b});
        nodes_[static_cast<size_t>(id)].back = [this, a, b, id]() {
            const Mat& dC = grad_of(id);
            Mat &dA = grad_of(a), &dB = grad_of(b);
            for (int r = 0; r < dC.rows; ++r)
                for (int c = 0; c < dC.cols; ++c) {
                    dA.at(r, c) += dC.at(r, c);
                    dB.at(0, c) += dC.at(r, c);
                }
        };
        return id;
    }

    /// C[r,c] = A[r,c] * b[0,c]; the affine scale of a layer norm.
    int mul_rowvec(int a, int b) {
        const Mat &A = val(a), &B = val(b);
        if (B.rows != 1 || B.cols != A.cols) throw DimensionError("mul_rowvec: bad scale shape");
        Mat C = A;
        for (int r = 0; r < C.rows; ++r)
            for (int c = 0; c < C.cols; ++c) C.at(r, c) *= B.at(0, c);
        int id = push(std::move(C), "mul_rowvec", {a, b});
        nodes_[static_cast<size_t>(id)].back = [this, a, b, id]() {
            const Mat &A = val(a), &B = val(b), &dC = grad_of(id);
            Mat &dA = grad_of(a), &dB = grad_of(b);
            for (int r = 0; r < dC.rows; ++r)
                for (int c = 0; c < dC.cols; ++c) {
                    dA.at(r, c) += dC.at(r, c) * B.at(0, c);
                    dB.at(0, c) += dC.at(r, c) * A.at(r, c);
                }
        };
        return id;
    }

    int gelu(int a) {
        const Mat& A = val(a);
        Mat C = A;
        for (auto& x : C.v) x = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
        int id = push(std::move(C), "gelu", {a});
        nodes_[static_cast<size_t>(id)].back = [this, a, id]() {
            const Mat &A = val(a), &dC = grad_of(id);
            Mat& dA = grad_of(a);
            constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
            for (size_t i = 0; i < A.size(); ++i) {
                double x = A.v[i];
                double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
                double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
                dA.v[i] += dC.v[i] * (cdf + x * pdf);
            }
        };
        return id;
    }

    /// Row-wise normalization (x - mean) / sqrt(var + eps), no affine part.
    int layernorm(int a, double eps = 1e-5) {
        const Mat& A = val(a);
        Mat C(A.rows, A.cols);
        for (int r = 0; r < A.rows; ++r) {
            double mean = 0.0;
            for (int c = 0; c < A.cols; ++c) mean += A.at(r, c);
            mean /= A.cols;
            double var = 0.0;
            for (int c = 0; c < A.cols; ++c) {
                double d = A.at(r, c) - mean;
                var += d * d;
            }
            var /= A.cols;
            double inv = 1.0 / std::sqrt(var + eps);
            for (int c = 0; c < A.cols; ++c) C.at(r, c) = (A.at(r, c) - mean) * inv;
        }
        int id = push(std::move(C), "layernorm", {a});
        nodes_[static_cast<size_t>(id)].back = [this, a, id, eps]() {
            const Mat &A = val(a), &Y = val(id), &dY = grad_of(id);
            Mat& dA = grad_of(a);
            int d = A.cols;
            for (int r = 0; r < A.rows; ++r) {
                double mean = 0.0;
                for (int c = 0; c < d; ++c) mean += A.at(r, c);
                mean /= d;
                double var = 0.0;
                for (int c = 0; c < d; ++c) {
                    double dd = A.at(r, c) - mean;
                    var += dd * dd;
                }
                var /= d;
                double inv = 1.0 / std::sqrt(var + eps);
                double mg = 0.0, mgy = 0.0;
                for (int c = 0; c < d; ++c) {
                    mg += dY.at(r, c);
                    mgy += dY.at(r, c) * Y.at(r, c);
                }
                mg /= d;
                mgy /= d;
                for (int c = 0; c < d; ++c)
                    dA.at(r, c) += inv * (dY.at(r, c) - mg - Y.at(r, c) * mgy);
            }
        };
        return id;
    }

    /// out[r,:] = table[idx[r],:]. Embedding lookup.
    int row_gather(int table, std::vector<int> idx) {
        const Mat& T = val(table);
        Mat C(static_cast<int>(idx.size()), T.cols);
        for (size_t r = 0; r < idx.size(); ++r) {
            if (idx[r] < 0 || idx[r] >= T.rows) throw ArgumentError("row_gather: index out of range");
            for (int c = 0; c < T.cols; ++c) C.at(static_cast<int>(r), c) = T.at(idx[r], c);
        }
        int id = push(std::move(C), "row_gather", {table});
        nodes_[static_cast<size_t>(id)].back = [this, table, id, idx]() {
            const Mat& dC = grad_of(id);
            Mat& dT = grad_of(table);
            for (size_t r = 0; r < idx.size(); ++r)
                for (int c = 0; c < dC.cols; ++c)
                    dT.at(idx[r], c) += dC.at(static_cast<int>(r), c);
        };
        return id;
    }

    /// out[r,:] = table[0, idx[r]] * A[r,:]. Per-row learned scalar gate.
    int scale_rows_by(int a, int table, std::vector<int> idx) {
        const Mat &A = val(a), &T = val(table);
        if (T.rows != 1) throw DimensionError("scale_rows_by: table must be a row vector");
        if (static_cast<int>(idx.size()) != A.rows)
            throw DimensionError("scale_rows_by: one index per row required");
        Mat C = A;
        for (int r = 0; r < A.rows; ++r) {
            if (idx[static_cast<size_t>(r)] < 0 || idx[static_cast<size_t>(r)] >= T.cols)
                throw ArgumentError("scale_rows_by: index out of range");
            double s = T.at(0, idx[static_cast<size_t>(r)]);
            for (int c = 0; c < A.cols; ++c) C.at(r, c) *= s;
        }
        int id = push(std::move(C), "scale_rows_by", {a, table});
        nodes_[static_cast<size_t>(id)].back = [this, a, table, id, idx]() {
            const Mat &A = val(a), &T = val(table), &dC = grad_of(id);
            Mat &dA = grad_of(a), &dT = grad_of(table);
            for (int r = 0; r < A.rows; ++r) {
                double s = T.at(0, idx[static_cast<size_t>(r)]);
                double acc = 0.0;
                for (int c = 0; c < A.cols; ++c) {
                    dA.at(r, c) += dC.at(r, c) * s;
                    acc += dC.at(r, c) * A.at(r, c);
                }
                dT.at(0, idx[static_cast<size_t>(r)]) += acc;
            }
        };
        return id;
    }

    /// softmax(q k^T / sqrt(d) + causal mask) v. Row i only ever touches
    /// rows j <= i, in ascending j order, so row i's result is bit-identical
    /// for any sequence length >= i + 1.
    int causal_attention(int q, int k, int v) {
        const Mat &Q = val(q), &K = val(k), &V = val(v);
        if (Q.cols == 0) throw ArgumentError("causal_attention: feature dim must be positive");
        if (Q.rows != K.rows || Q.rows != V.rows || Q.cols != K.cols)
            throw DimensionError("causal_attention: shape mismatch");
        int n = Q.rows, d = Q.cols, dv = V.cols;
        double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
        Mat P(n, n);  // row-stochastic over the causal prefix; kept for backward
        Mat C(n, dv);
        for (int i = 0; i < n; ++i) {
            double mx = -1e300;
            for (int j = 0; j <= i; ++j) {
                double s = 0.0;
                for (int c = 0; c < d; ++c) s += Q.at(i, c) * K.at(j, c);
                s *= inv_sqrt_d;
                P.at(i, j) = s;
                if (s > mx) mx = s;
            }
            double denom = 0.0;
            for (int j = 0; j <= i; ++j) {
                double e = std::exp(P.at(i, j) - mx);
                P.at(i, j) = e;
                denom += e;
            }
            for (int j = 0; j <= i; ++j) P.at(i, j) /= denom;
            for (int c = 0; c < dv; ++c) {
                double acc = 0.0;
                for (int j = 0; j <= i; ++j) acc += P.at(i, j) * V.at(j, c);
                C.at(i, c) = acc;
            }
        }
        int id = push(std::move(C), "causal_attention", {q, k, v});
        attn_probs_.push_back(std::move(P));
        size_t pidx = attn_probs_.size() - 1;
        nodes_[static_cast<size_t>(id)].back = [this, q, k, v, id, pidx, inv_sqrt_d]() {
            const Mat &Q = val(q), &K = val(k), &V = val(v), &dC = grad_of(id);
            const Mat& P = attn_probs_[pidx];
            Mat &dQ = grad_of(q), &dK = grad_of(k), &dV = grad_of(v);
            int n = Q.rows, d = Q.cols, dv = V.cols;
            std::vector<double> dp(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                double dot = 0.0;
                for (int j = 0; j <= i; ++j) {
                    double acc = 0.0;
                    for (int c = 0; c < dv; ++c) acc += dC.at(i, c) * V.at(j, c);
                    dp[static_cast<size_t>(j)] = acc;
                    dot += acc * P.at(i, j);
                }
                for (int j = 0; j <= i; ++j) {
                    double ds = P.at(i, j) * (dp[static_cast<size_t>(j)] - dot) * inv_sqrt_d;
                    for (int c = 0; c < d; ++c) {
                        dQ.at(i, c) += ds * K.at(j, c);
                        dK.at(j, c) += ds * Q.at(i, c);
                    }
                    for (int c = 0; c < dv; ++c) dV.at(j, c) += P.at(i, j) * dC.at(i, c);
                }
            }
        };
        return id;
    }

    /// Scalar loss node: sum of squared differences against a constant target.
    int sum_sq_diff(int a, Mat target) {
        const Mat& A = val(a);
        if (A.rows != target.rows || A.cols != target.cols)
            throw DimensionError("sum_sq_diff: target shape mismatch");
        Mat C(1, 1);
        double acc = 0.0;
        for (size_t i = 0; i < A.size(); ++i) {
            double d = A.v[i] - target.v[i];
            acc += d * d;
        }
        C.at(0, 0) = acc;
        int id = push(std::move(C), "sum_sq_diff", {a});
        targets_.push_back(std::move(target));
        size_t tidx = targets_.size() - 1;
        nodes_[static_cast<size_t>(id)].back = [this, a, id, tidx]() {
            const Mat& A = val(a);
            const Mat& T = targets_[tidx];
            double g = grad_of(id).at(0, 0);
            Mat& dA = grad_of(a);
            for (size_t i = 0; i < A.size(); ++i) dA.v[i] += 2.0 * g * (A.v[i] - T.v[i]);
        };
        return id;
    }

    /// Seed d(node)=1 and sweep the tape in reverse.
    void backward(int node) {
        for (auto& n : nodes_) {
            n.grad = Mat(n.val.rows, n.val.cols);
        }
        grad_of(node).v.assign(grad_of(node).size(), 0.0);
        if (val(node).size() != 1) throw ArgumentError("backward: seed node must be scalar");
        grad_of(node).at(0, 0) = 1.0;
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
            if (nodes_[static_cast<size_t>(i)].back) nodes_[static_cast<size_t>(i)].back();
    }

    const Mat& val(int i) const { return nodes_[static_cast<size_t>(i)].val; }
    Mat& grad_of(int i) { return nodes_[static_cast<size_t>(i)].grad; }

private:
    struct Node {
        Mat val;
        Mat grad;
        std::string name;
        std::function<void()> back;
    };

    int push(Mat m, std::string name, std::vector<int> /*parents*/) {
        for (double x : m.v)
            if (!std::isfinite(x))
                throw NumericError("tape: non-finite value produced by op '" + name +
                                   "' (node " + std::to_string(nodes_.size()) + ")");
        nodes_.push_back(Node{std::move(m), Mat(), std::move(name), nullptr});
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    std::vector<Mat> attn_probs_;
    std::vector<Mat> targets_;
};

}  // namespace aid
