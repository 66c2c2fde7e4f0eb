#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoi_sim/rng.hpp"

namespace aoisim::nn {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

enum class OutputActivation { Sigmoid, Identity };

/// Two-layer perceptron in -> hidden (tanh) -> out, with manual backprop.
/// Parameters are flat row-major matrices so they serialize directly.
class Mlp {
public:
    Mlp() = default;
    Mlp(int n_in, int n_hidden, int n_out, OutputActivation out_act, Rng& rng,
        double init_scale = 0.1)
        : n_in_(n_in), n_hidden_(n_hidden), n_out_(n_out), out_act_(out_act),
          w1_(static_cast<std::size_t>(n_hidden) * n_in), b1_(n_hidden),
          w2_(static_cast<std::size_t>(n_out) * n_hidden), b2_(n_out) {
        for (auto& w : w1_) w = rng.gaussian(0.0, init_scale / std::sqrt(double(n_in)));
        for (auto& w : w2_) w = rng.gaussian(0.0, init_scale / std::sqrt(double(n_hidden)));
    }

    int n_in() const { return n_in_; }
    int n_hidden() const { return n_hidden_; }
    int n_out() const { return n_out_; }

    struct Trace {
        std::vector<double> input;
        std::vector<double> hidden;  // tanh activations
        std::vector<double> output;  // post-activation
    };

    std::vector<double> forward(const std::vector<double>& x, Trace* trace = nullptr) const {
        if (static_cast<int>(x.size()) != n_in_)
            throw std::invalid_argument("Mlp::forward: input size mismatch");
        std::vector<double> h(n_hidden_);
        for (int j = 0; j < n_hidden_; ++j) {
            double z = b1_[j];
            const double* row = &w1_[static_cast<std::size_t>(j) * n_in_];
            for (int i = 0; i < n_in_; ++i) z += row[i] * x[i];
            h[j] = std::tanh(z);
        }
        std::vector<double> y(n_out_);
        for (int k = 0; k < n_out_; ++k) {
            double z = b2_[k];
            const double* row = &w2_[static_cast<std::size_t>(k) * n_hidden_];
            for (int j = 0; j < n_hidden_; ++j) z += row[j] * h[j];
            y[k] = out_act_ == OutputActivation::Sigmoid ? sigmoid(z) : z;
        }
        if (trace) {
            trace->input = x;
            trace->hidden = h;
            trace->output = y;
        }
        return y;
    }

    struct Gradients {
        std::vector<double> w1, b1, w2, b2;
    };

    Gradients zero_gradients() const {
        return {std::vector<double>(w1_.size(), 0.0), std::vector<double>(b1_.size(), 0.0),
                std::vector<double>(w2_.size(), 0.0), std::vector<double>(b2_.size(), 0.0)};
    }

    /// Accumulates dL/dparams given dL/d(output pre-activation). For sigmoid
    /// outputs the caller usually has dL/dy; converting to dL/dz with
    /// y(1-y) is its business, which keeps log-prob gradients exact.
    void backward(const Trace& trace, const std::vector<double>& dloss_dz_out,
                  Gradients& grads) const {
        if (static_cast<int>(dloss_dz_out.size()) != n_out_)
            throw std::invalid_argument("Mlp::backward: gradient size mismatch");
        std::vector<double> dh(n_hidden_, 0.0);
        for (int k = 0; k < n_out_; ++k) {
            const double g = dloss_dz_out[k];
            grads.b2[k] += g;
            double* wrow = &grads.w2[static_cast<std::size_t>(k) * n_hidden_];
            const double* w = &w2_[static_cast<std::size_t>(k) * n_hidden_];
            for (int j = 0; j < n_hidden_; ++j) {
                wrow[j] += g * trace.hidden[j];
                dh[j] += g * w[j];
            }
        }
        for (int j = 0; j < n_hidden_; ++j) {
            const double dz = dh[j] * (1.0 - trace.hidden[j] * trace.hidden[j]);
            grads.b1[j] += dz;
            double* wrow = &grads.w1[static_cast<std::size_t>(j) * n_in_];
            for (int i = 0; i < n_in_; ++i) wrow[i] += dz * trace.input[i];
        }
    }

    std::vector<double*> param_views() {
        return collect(w1_, b1_, w2_, b2_);
    }
    std::vector<const double*> grad_views(const Gradients& g) const {
        return {g.w1.data(), g.b1.data(), g.w2.data(), g.b2.data()};
    }
    std::vector<std::size_t> param_sizes() const {
        return {w1_.size(), b1_.size(), w2_.size(), b2_.size()};
    }

    // Flat parameter access for finite-difference checks and serialization.
    std::size_t n_params() const { return w1_.size() + b1_.size() + w2_.size() + b2_.size(); }
    double get_param(std::size_t i) const { return *locate(i); }
    void set_param(std::size_t i, double v) { *const_cast<double*>(locate(i)) = v; }

    nlohmann::json to_json() const {
        return {{"n_in", n_in_},
                {"n_hidden", n_hidden_},
                {"n_out", n_out_},
                {"output_activation",
                 out_act_ == OutputActivation::Sigmoid ? "sigmoid" : "identity"},
                {"w1", w1_}, {"b1", b1_}, {"w2", w2_}, {"b2", b2_}};
    }

    static Mlp from_json(const nlohmann::json& j) {
        Mlp m;
        m.n_in_ = j.at("n_in").get<int>();
        m.n_hidden_ = j.at("n_hidden").get<int>();
        m.n_out_ = j.at("n_out").get<int>();
        m.out_act_ = j.at("output_activation").get<std::string>() == "sigmoid"
                         ? OutputActivation::Sigmoid
                         : OutputActivation::Identity;
        m.w1_ = j.at("w1").get<std::vector<double>>();
        m.b1_ = j.at("b1").get<std::vector<double>>();
        m.w2_ = j.at("w2").get<std::vector<double>>();
        m.b2_ = j.at("b2").get<std::vector<double>>();
        const auto expect = [](std::size_t got, std::size_t want, const char* what) {
            if (got != want)
                throw std::invalid_argument(std::string("Mlp::from_json: bad size for ") + what);
        };
        expect(m.w1_.size(), static_cast<std::size_t>(m.n_hidden_) * m.n_in_, "w1");
        expect(m.b1_.size(), static_cast<std::size_t>(m.n_hidden_), "b1");
        expect(m.w2_.size(), static_cast<std::size_t>(m.n_out_) * m.n_hidden_, "w2");
        expect(m.b2_.size(), static_cast<std::size_t>(m.n_out_), "b2");
        return m;
    }

private:
    static std::vector<double*> collect(std::vector<double>& a, std::vector<double>& b,
                                        std::vector<double>& c, std::vector<double>& d) {
        return {a.data(), b.data(), c.data(), d.data()};
    }
    const double* locate(std::size_t i) const {
        if (i < w1_.size()) return &w1_[i];
        i -= w1_.size();
        if (i < b1_.size()) return &b1_[i];
        i -= b1_.size();
        if (i < w2_.size()) return &w2_[i];
        i -= w2_.size();
        if (i < b2_.size()) return &b2_[i];
        throw std::out_of_range("Mlp: parameter index out of range");
    }

    int n_in_ = 0, n_hidden_ = 0, n_out_ = 0;
    OutputActivation out_act_ = OutputActivation::Identity;
    std::vector<double> w1_, b1_, w2_, b2_;
};

/// Adam, ascent or descent chosen by the sign of `direction`.
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n_params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0),
          v_(n_params, 0.0) {}

    /// Applies one step: params += direction * lr * mhat / (sqrt(vhat)+eps).
    void step(Mlp& net, const Mlp::Gradients& grads, double direction) {
        ++t_;
        const auto params = net.param_views();
        const auto gptr = net.grad_views(grads);
        const auto sizes = net.param_sizes();
        std::size_t offset = 0;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t block = 0; block < params.size(); ++block) {
            double* p = params[block];
            const double* g = gptr[block];
            for (std::size_t i = 0; i < sizes[block]; ++i) {
                const std::size_t k = offset + i;
                m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g[i];
                v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g[i] * g[i];
                const double mhat = m_[k] / bc1;
                const double vhat = v_[k] / bc2;
                p[i] += direction * lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
            offset += sizes[block];
        }
    }

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace aoisim::nn
