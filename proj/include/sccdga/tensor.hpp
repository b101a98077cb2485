#ifndef SCCDGA_TENSOR_HPP
#define SCCDGA_TENSOR_HPP

#include "cellgraph.hpp"
#include "error.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

/**
 * @file tensor.hpp
 *
 * @brief Matrix-valued reverse-mode differentiation, the layers built on it,
 * and the Adam optimizer.
 *
 * A `Tape` records every operation of one forward pass. Each node holds its
 * value and, after `Tape::backward()`, the gradient of the scalar loss with
 * respect to that value. Operations check their outputs and throw
 * `NumericError` on the first NaN or Inf.
 */

namespace sccdga {

class Tape;

/**
 * Handle to a node on a `Tape`. Cheap to copy; only valid while the tape lives.
 */
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Named learnable tensors. Ordered by name, which fixes iteration order everywhere.
using ParamSet = std::map<std::string, Matrix>;
using GradMap = std::map<std::string, Matrix>;
/// Tape handles of the entries of a `ParamSet`.
using Bindings = std::map<std::string, Var>;

/**
 * Arithmetic used for matrix products. `single` rounds both operands to float
 * for the product (roughly twice the throughput); everything else stays in
 * double. Gradient checks need `double_precision`.
 */
enum class ProductPrecision { double_precision, single };

class Tape {
public:
    Tape() = default;
    explicit Tape(ProductPrecision precision) : precision_(precision) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Constant input; gradients are not tracked.
    Var constant(Matrix value) { return push(std::move(value), false, "constant"); }

    /// Differentiable leaf.
    Var variable(Matrix value) { return push(std::move(value), true, "variable"); }

    /// Differentiable leaves for every entry of `params`.
    Bindings bind(const ParamSet& params) {
        Bindings out;
        for (const auto& [name, value] : params) out.emplace(name, push(value, true, name));
        return out;
    }

    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

    /**
     * Records an operation. `backward` receives the gradient of the output and
     * pushes contributions to its inputs through `accumulate()`.
     */
    Var record(Matrix value, std::initializer_list<Var> inputs, const char* op, std::function<void(const Matrix&)> backward) {
        bool rg = false;
        for (const auto& v : inputs) rg = rg || requires_grad(v.id);
        Var out = push(std::move(value), rg, op);
        if (rg) nodes_.back().backward = std::move(backward);
        return out;
    }

    void accumulate(Var v, const Matrix& g) {
        auto& node = nodes_[static_cast<std::size_t>(v.id)];
        if (!node.requires_grad) return;
        if (node.grad.size() == 0) {
            node.grad = g;
        } else {
            node.grad += g;
        }
    }

    /**
     * Reverse sweep from a 1x1 `loss`. Gradients of leaves that the loss does
     * not depend on are zero.
     */
    void backward(Var loss) {
        const auto& lv = value(loss.id);
        if (lv.rows() != 1 || lv.cols() != 1) {
            throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(lv));
        }
        for (auto& n : nodes_) n.grad.resize(0, 0);
        nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);
        for (int id = loss.id; id >= 0; --id) {
            auto& node = nodes_[static_cast<std::size_t>(id)];
            if (node.grad.size() == 0 || !node.backward) continue;
            Matrix g = std::move(node.grad);
            node.backward(g);
            node.grad = std::move(g);
        }
        for (auto& n : nodes_) {
            if (n.requires_grad && n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
        }
    }

    /// Runs `backward(loss)` and collects gradients for the bound parameters.
    GradMap gradients(Var loss, const Bindings& bindings) {
        backward(loss);
        GradMap out;
        for (const auto& [name, v] : bindings) out.emplace(name, grad(v.id));
        return out;
    }

    std::size_t size() const { return nodes_.size(); }

    ProductPrecision precision() const { return precision_; }

    /// `a * b` in the tape's product precision.
    template <typename A, typename B>
    Matrix product(const A& a, const B& b) const {
        if (precision_ == ProductPrecision::single) {
            using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            const MatrixF af = a.template cast<float>();
            const MatrixF bf = b.template cast<float>();
            MatrixF out;
            out.noalias() = af * bf;
            return out.template cast<double>();
        }
        Matrix out;
        out.noalias() = a * b;
        return out;
    }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        std::function<void(const Matrix&)> backward;
    };

    Var push(Matrix value, bool requires_grad, const std::string& op) {
        if (!value.allFinite()) {
            throw NumericError("non-finite value produced by '" + op + "'");
        }
        nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, {}});
        return Var{this, static_cast<int>(nodes_.size() - 1)};
    }

    std::vector<Node> nodes_;
    ProductPrecision precision_ = ProductPrecision::double_precision;
};

inline const Matrix& Var::value() const { return tape->value(id); }
inline const Matrix& Var::grad() const { return tape->grad(id); }

enum class Activation { identity, relu, leaky_relu };

inline constexpr double leaky_slope = 0.2;

namespace detail {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shapes " + shape_string(a) + " and " + shape_string(b) + " differ");
    }
}

}

/// `a * b`.
inline Var matmul(Var a, Var b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw ShapeError("matmul: shapes " + shape_string(av) + " and " + shape_string(bv) + " do not agree");
    }
    Tape* t = a.tape;
    return t->record(t->product(av, bv), {a, b}, "matmul", [t, a, b](const Matrix& g) {
        if (t->requires_grad(a.id)) t->accumulate(a, t->product(g, t->value(b.id).transpose()));
        if (t->requires_grad(b.id)) t->accumulate(b, t->product(t->value(a.id).transpose(), g));
    });
}

/// Adds the 1 x g row `bias` to every row of `x`.
inline Var add_bias(Var x, Var bias) {
    const auto& xv = x.value();
    const auto& bv = bias.value();
    if (bv.rows() != 1 || bv.cols() != xv.cols()) {
        throw ShapeError("add_bias: input " + shape_string(xv) + " and bias " + shape_string(bv) + " do not agree");
    }
    Matrix out = xv.rowwise() + bv.row(0);
    Tape* t = x.tape;
    return t->record(std::move(out), {x, bias}, "add_bias", [t, x, bias](const Matrix& g) {
        t->accumulate(x, g);
        t->accumulate(bias, g.colwise().sum());
    });
}

inline Var add(Var a, Var b) {
    detail::require_same_shape(a.value(), b.value(), "add");
    Tape* t = a.tape;
    return t->record(a.value() + b.value(), {a, b}, "add", [t, a, b](const Matrix& g) {
        t->accumulate(a, g);
        t->accumulate(b, g);
    });
}

inline Var scale(Var a, double s) {
    Tape* t = a.tape;
    return t->record(a.value() * s, {a}, "scale", [t, a, s](const Matrix& g) { t->accumulate(a, g * s); });
}

/// Elementwise product.
inline Var hadamard(Var a, Var b) {
    detail::require_same_shape(a.value(), b.value(), "hadamard");
    Tape* t = a.tape;
    return t->record(a.value().cwiseProduct(b.value()), {a, b}, "hadamard", [t, a, b](const Matrix& g) {
        t->accumulate(a, g.cwiseProduct(t->value(b.id)));
        t->accumulate(b, g.cwiseProduct(t->value(a.id)));
    });
}

/// Sum of all entries, as a 1x1 node.
inline Var sum(Var a) {
    Tape* t = a.tape;
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return t->record(std::move(out), {a}, "sum", [t, a](const Matrix& g) {
        t->accumulate(a, Matrix::Constant(t->value(a.id).rows(), t->value(a.id).cols(), g(0, 0)));
    });
}

inline Var activate(Var x, Activation act) {
    if (act == Activation::identity) return x;
    const double slope = act == Activation::relu ? 0.0 : leaky_slope;
    Tape* t = x.tape;
    Matrix out = x.value().unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
    return t->record(std::move(out), {x}, act == Activation::relu ? "relu" : "leaky_relu", [t, x, slope](const Matrix& g) {
        const auto& xv = t->value(x.id);
        Matrix d = g;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (!(xv.data()[i] > 0)) d.data()[i] *= slope;
        }
        t->accumulate(x, d);
    });
}

inline Var relu(Var x) { return activate(x, Activation::relu); }

/// `act(input * w + bias)`.
inline Var dense_forward(Var input, Var w, Var bias, Activation act) {
    return activate(add_bias(matmul(input, w), bias), act);
}

/// Column-wise concatenation `[a | b]`.
inline Var concat_cols(Var a, Var b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.rows() != bv.rows()) {
        throw ShapeError("concat_cols: row counts of " + shape_string(av) + " and " + shape_string(bv) + " differ");
    }
    Matrix out(av.rows(), av.cols() + bv.cols());
    out << av, bv;
    Tape* t = a.tape;
    const auto ca = av.cols();
    const auto cb = bv.cols();
    return t->record(std::move(out), {a, b}, "concat_cols", [t, a, b, ca, cb](const Matrix& g) {
        t->accumulate(a, g.leftCols(ca));
        t->accumulate(b, g.rightCols(cb));
    });
}

/**
 * Attention coefficients of a single-head graph attention layer, given the
 * transformed features `hw = h * w`. Row `i` holds the softmax over
 * `graph.neighbors[i]` of `leaky_relu(attn . [hw_i | hw_j])`, in neighbor order.
 */
inline std::vector<std::vector<double>> attention_coefficients(const Matrix& hw, const CellGraph& graph, const Matrix& attn) {
    const auto g = hw.cols();
    const Vector src = hw * attn.leftCols(g).transpose();
    const Vector dst = hw * attn.rightCols(g).transpose();
    std::vector<std::vector<double>> alpha(graph.neighbors.size());
    for (std::size_t i = 0; i < graph.neighbors.size(); ++i) {
        const auto& nb = graph.neighbors[i];
        if (nb.empty()) throw std::logic_error("graph attention: node " + std::to_string(i) + " has no neighbors");
        auto& a = alpha[i];
        a.resize(nb.size());
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const double e = src(static_cast<Eigen::Index>(i)) + dst(nb[k]);
            a[k] = e > 0 ? e : leaky_slope * e;
            m = std::max(m, a[k]);
        }
        double total = 0;
        for (auto& v : a) {
            v = std::exp(v - m);
            total += v;
        }
        for (auto& v : a) v /= total;
    }
    return alpha;
}

/**
 * Single-head graph attention: `out_i = relu(sum_j alpha_ij (h w)_j)` over the
 * neighbors `j` of `i`, with `alpha` from `attention_coefficients()`. `attn`
 * is a 1 x 2g row. `graph` must outlive the tape.
 */
inline Var graph_attention_layer(Var h, const CellGraph& graph, Var w, Var attn) {
    const auto& hv = h.value();
    const auto& wv = w.value();
    const auto& av = attn.value();
    if (hv.cols() != wv.rows()) {
        throw ShapeError("graph_attention_layer: input " + shape_string(hv) + " and weight " + shape_string(wv) + " do not agree");
    }
    if (av.rows() != 1 || av.cols() != 2 * wv.cols()) {
        throw ShapeError("graph_attention_layer: attention vector " + shape_string(av) + " must be (1, " + std::to_string(2 * wv.cols()) + ")");
    }
    if (static_cast<Eigen::Index>(graph.n_nodes()) != hv.rows()) {
        throw ShapeError("graph_attention_layer: graph has " + std::to_string(graph.n_nodes()) + " nodes but input has " + std::to_string(hv.rows()) + " rows");
    }

    Matrix hw = h.tape->product(hv, wv);
    auto alpha = attention_coefficients(hw, graph, av);
    Matrix agg = Matrix::Zero(hw.rows(), hw.cols());
    for (std::size_t i = 0; i < graph.neighbors.size(); ++i) {
        const auto& nb = graph.neighbors[i];
        for (std::size_t k = 0; k < nb.size(); ++k) agg.row(static_cast<Eigen::Index>(i)) += alpha[i][k] * hw.row(nb[k]);
    }
    Matrix out = agg.cwiseMax(0.0);

    Tape* t = h.tape;
    const CellGraph* gp = &graph;
    return t->record(std::move(out), {h, w, attn}, "graph_attention", [t, h, w, attn, gp, hw = std::move(hw), agg = std::move(agg), alpha = std::move(alpha)](const Matrix& gout) {
        const auto& av = t->value(attn.id);
        const auto g = hw.cols();
        const RowVector a_src = av.leftCols(g);
        const RowVector a_dst = av.rightCols(g);
        const Vector src = hw * a_src.transpose();
        const Vector dst = hw * a_dst.transpose();

        const Matrix dagg = gout.cwiseProduct((agg.array() > 0).cast<double>().matrix());
        Matrix dhw = Matrix::Zero(hw.rows(), g);
        Vector dsrc = Vector::Zero(hw.rows());
        Vector ddst = Vector::Zero(hw.rows());
        std::vector<double> dalpha;
        for (std::size_t i = 0; i < gp->neighbors.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto& nb = gp->neighbors[i];
            const auto& a = alpha[i];
            dalpha.assign(nb.size(), 0.0);
            double weighted = 0;
            for (std::size_t k = 0; k < nb.size(); ++k) {
                dhw.row(nb[k]) += a[k] * dagg.row(ii);
                dalpha[k] = dagg.row(ii).dot(hw.row(nb[k]));
                weighted += a[k] * dalpha[k];
            }
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const double de = a[k] * (dalpha[k] - weighted);
                const double pre = src(ii) + dst(nb[k]);
                const double dpre = pre > 0 ? de : leaky_slope * de;
                dsrc(ii) += dpre;
                ddst(nb[k]) += dpre;
            }
        }
        dhw += dsrc * a_src + ddst * a_dst;

        if (t->requires_grad(attn.id)) {
            Matrix dattn(1, 2 * g);
            dattn.leftCols(g) = dsrc.transpose() * hw;
            dattn.rightCols(g) = ddst.transpose() * hw;
            t->accumulate(attn, dattn);
        }
        if (t->requires_grad(w.id)) t->accumulate(w, t->product(t->value(h.id).transpose(), dhw));
        if (t->requires_grad(h.id)) t->accumulate(h, t->product(dhw, t->value(w.id).transpose()));
    });
}

/**
 * `1 - mean_i cos(target_i, recon_i)`. A row where either side is zero
 * contributes similarity 0 and no gradient.
 */
inline Var cosine_loss(const Matrix& target, Var recon) {
    detail::require_same_shape(target, recon.value(), "cosine_loss");
    const auto& rv = recon.value();
    const auto n = target.rows();
    Vector cos = Vector::Zero(n);
    Vector tn = target.rowwise().norm();
    Vector rn = rv.rowwise().norm();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (tn(i) > 0 && rn(i) > 0) cos(i) = target.row(i).dot(rv.row(i)) / (tn(i) * rn(i));
    }
    Matrix out(1, 1);
    out(0, 0) = 1.0 - cos.sum() / static_cast<double>(n);
    Tape* t = recon.tape;
    return t->record(std::move(out), {recon}, "cosine_loss", [t, recon, target, cos, tn, rn](const Matrix& g) {
        const auto& rv = t->value(recon.id);
        const double s = -g(0, 0) / static_cast<double>(rv.rows());
        Matrix d = Matrix::Zero(rv.rows(), rv.cols());
        for (Eigen::Index i = 0; i < rv.rows(); ++i) {
            if (!(tn(i) > 0 && rn(i) > 0)) continue;
            d.row(i) = s * (target.row(i) / (tn(i) * rn(i)) - cos(i) * rv.row(i) / (rn(i) * rn(i)));
        }
        t->accumulate(recon, d);
    });
}

/// Mean absolute difference over all entries.
inline Var mae_loss(const Matrix& target, Var recon) {
    detail::require_same_shape(target, recon.value(), "mae_loss");
    const double count = static_cast<double>(target.size());
    Matrix out(1, 1);
    out(0, 0) = (recon.value() - target).cwiseAbs().sum() / count;
    Tape* t = recon.tape;
    return t->record(std::move(out), {recon}, "mae_loss", [t, recon, target, count](const Matrix& g) {
        const Matrix diff = t->value(recon.id) - target;
        Matrix d = diff.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
        t->accumulate(recon, d * (g(0, 0) / count));
    });
}

/**
 * Student-t soft assignment of embedding rows to center rows:
 * `q_ij = k_ij / sum_l k_il` with `k_ij = 1 / (1 + |z_i - u_j|^2)`.
 */
inline Var student_t_assign(Var z, Var centers) {
    const auto& zv = z.value();
    const auto& uv = centers.value();
    if (zv.cols() != uv.cols()) {
        throw ShapeError("student_t_assign: embedding " + shape_string(zv) + " and centers " + shape_string(uv) + " do not agree");
    }
    Matrix kernel(zv.rows(), uv.rows());
    for (Eigen::Index i = 0; i < zv.rows(); ++i) {
        for (Eigen::Index j = 0; j < uv.rows(); ++j) kernel(i, j) = 1.0 / (1.0 + (zv.row(i) - uv.row(j)).squaredNorm());
    }
    const Vector totals = kernel.rowwise().sum();
    Matrix q = kernel.array().colwise() / totals.array();
    Tape* t = z.tape;
    return t->record(q, {z, centers}, "student_t_assign", [t, z, centers, kernel, totals, q](const Matrix& g) {
        const auto& zv = t->value(z.id);
        const auto& uv = t->value(centers.id);
        Matrix dz = Matrix::Zero(zv.rows(), zv.cols());
        Matrix du = Matrix::Zero(uv.rows(), uv.cols());
        for (Eigen::Index i = 0; i < zv.rows(); ++i) {
            const double inner = q.row(i).dot(g.row(i));
            for (Eigen::Index j = 0; j < uv.rows(); ++j) {
                const double dk = (g(i, j) - inner) / totals(i);
                // d k / d dist^2 = -k^2, d dist^2 / d z_i = 2 (z_i - u_j)
                const double dd = -kernel(i, j) * kernel(i, j) * dk;
                const RowVector diff = zv.row(i) - uv.row(j);
                dz.row(i) += 2 * dd * diff;
                du.row(j) -= 2 * dd * diff;
            }
        }
        t->accumulate(z, dz);
        t->accumulate(centers, du);
    });
}

/**
 * `sum_ij p_ij log(p_ij / q_ij)` with the target `p` held constant and
 * `0 log 0 = 0`. Summed as `p log(p / q) - p + q` per entry, which has the
 * same total when rows of `p` and `q` sum to one; each entry is
 * non-negative, so rounding cannot push the total below zero.
 */
inline Var kl_to_target(const Matrix& p, Var q) {
    detail::require_same_shape(p, q.value(), "kl_to_target");
    const auto& qv = q.value();
    double kl = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double pi = p.data()[i];
        const double qi = qv.data()[i];
        const double term = pi > 0 ? pi * std::log(pi / qi) - pi + qi : qi;
        kl += std::max(term, 0.0);
    }
    Matrix out(1, 1);
    out(0, 0) = kl;
    Tape* t = q.tape;
    return t->record(std::move(out), {q}, "kl_to_target", [t, q, p](const Matrix& g) {
        const Matrix& qv = t->value(q.id);
        t->accumulate(q, g(0, 0) * (Matrix::Ones(qv.rows(), qv.cols()) - p.cwiseQuotient(qv)));
    });
}

/**
 * Adam with bias correction. Moments are kept per parameter name; a
 * parameter absent from the gradient map is left untouched.
 */
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamSet& params, const GradMap& grads) {
        for (const auto& [name, g] : grads) {
            if (!g.allFinite()) throw NumericError("non-finite gradient for parameter '" + name + "'");
        }
        ++t_;
        const double c1 = 1 - std::pow(beta1_, t_);
        const double c2 = 1 - std::pow(beta2_, t_);
        for (auto& [name, value] : params) {
            auto it = grads.find(name);
            if (it == grads.end()) continue;
            const Matrix& g = it->second;
            detail::require_same_shape(value, g, "Adam::step");
            auto& m = m_[name];
            auto& v = v_[name];
            if (m.size() == 0) {
                m = Matrix::Zero(g.rows(), g.cols());
                v = Matrix::Zero(g.rows(), g.cols());
            }
            m = beta1_ * m + (1 - beta1_) * g;
            v = beta2_ * v + (1 - beta2_) * g.cwiseProduct(g);
            value.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
        }
    }

    int steps() const { return t_; }
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::map<std::string, Matrix> m_, v_;
};

/// Uniform Glorot initialization for a `fan_in x fan_out` weight.
inline Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = limit * dist(rng);
    return w;
}

/// Loss as a function of bound parameters, recorded on the given tape.
using LossFunction = std::function<Var(Tape&, const Bindings&)>;

struct GradientCheck {
    double max_relative_error = 0;
    std::string worst_parameter;
    Eigen::Index worst_index = -1;
};

/**
 * Compares `backward()` gradients with central differences of step `eps`
 * for every coordinate of every parameter. The relative error of a
 * coordinate is `|analytic - numeric| / max(|analytic|, |numeric|, floor)`;
 * the floor keeps coordinates with vanishing gradient from dividing by zero.
 */
inline GradientCheck finite_difference_check(const LossFunction& f, const ParamSet& params, double eps = 1e-5, double floor = 1e-6) {
    GradMap analytic;
    {
        Tape tape;
        auto b = tape.bind(params);
        analytic = tape.gradients(f(tape, b), b);
    }
    auto eval = [&](const ParamSet& p) {
        Tape tape;
        auto b = tape.bind(p);
        return f(tape, b).value()(0, 0);
    };

    GradientCheck result;
    ParamSet probe = params;
    for (auto& [name, value] : probe) {
        const Matrix& g = analytic.at(name);
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double orig = value.data()[i];
            value.data()[i] = orig + eps;
            const double up = eval(probe);
            value.data()[i] = orig - eps;
            const double down = eval(probe);
            value.data()[i] = orig;
            const double numeric = (up - down) / (2 * eps);
            const double a = g.data()[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            if (rel > result.max_relative_error) {
                result.max_relative_error = rel;
                result.worst_parameter = name;
                result.worst_index = i;
            }
        }
    }
    return result;
}

inline constexpr const char* checkpoint_magic = "SCCDGA-CHECKPOINT";
inline constexpr int checkpoint_version = 1;

/**
 * Text checkpoint: a `SCCDGA-CHECKPOINT <version>` line, then one line per
 * parameter `name,rows,cols,v0,v1,...` in row-major order. Values are written
 * with 17 significant digits so they round-trip exactly.
 */
inline void write_checkpoint(std::ostream& out, const ParamSet& params) {
    out << checkpoint_magic << ' ' << checkpoint_version << '\n' << std::setprecision(17);
    for (const auto& [name, value] : params) {
        out << name << ',' << value.rows() << ',' << value.cols();
        for (Eigen::Index i = 0; i < value.size(); ++i) out << ',' << value.data()[i];
        out << '\n';
    }
}

inline void write_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    write_checkpoint(out, params);
}

inline ParamSet read_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty checkpoint");
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != checkpoint_magic) throw ParseError("not a checkpoint file", 1);
    if (version != checkpoint_version) throw ParseError("unsupported checkpoint version " + std::to_string(version), 1);

    ParamSet params;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto f = detail::split(line, ',');
        long long rows, cols;
        if (f.size() < 3 || !detail::parse_index(f[1], rows) || !detail::parse_index(f[2], cols) || rows < 0 || cols < 0) {
            throw ParseError("malformed parameter header", lineno);
        }
        if (f.size() != static_cast<std::size_t>(3 + rows * cols)) {
            throw ParseError("parameter '" + f[0] + "' has wrong number of values", lineno);
        }
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            if (!detail::parse_double(f[3 + static_cast<std::size_t>(i)], m.data()[i])) throw ParseError("non-numeric value", lineno);
        }
        if (!params.emplace(f[0], std::move(m)).second) throw ParseError("duplicate parameter '" + f[0] + "'", lineno);
    }
    return params;
}

inline ParamSet read_checkpoint(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_checkpoint(in);
}

}

#endif
