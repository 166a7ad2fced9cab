#pragma once
// Adam over an ordered list of parameter tensors. Parameters and gradients
// are registered as flat views so complex and real matrices share one path.

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace kbc {

struct TensorRef {
    double* data = nullptr;
    Eigen::Index size = 0;
};

inline TensorRef tensor_ref(Eigen::MatrixXd& m) { return {m.data(), m.size()}; }
inline TensorRef tensor_ref(Eigen::VectorXd& v) { return {v.data(), v.size()}; }
inline TensorRef tensor_ref(Eigen::MatrixXcd& m) {
    // std::complex<double> is layout-compatible with double[2]
    return {reinterpret_cast<double*>(m.data()), 2 * m.size()};
}

class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Call once with the parameter list to size the moment buffers.
    void initialize(const std::vector<TensorRef>& params) {
        m_.clear();
        v_.clear();
        for (const TensorRef& p : params) {
            m_.emplace_back(Eigen::ArrayXd::Zero(p.size));
            v_.emplace_back(Eigen::ArrayXd::Zero(p.size));
        }
        t_ = 0;
    }

    // params[i] and grads[i] must alias the same shapes in the same order as
    // the initialize() call.
    void step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            Eigen::Map<Eigen::ArrayXd> p(params[i].data, params[i].size);
            Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.square();
            p -= lr_ * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + eps_);
        }
    }

    double learning_rate() const { return lr_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    std::vector<Eigen::ArrayXd> m_;
    std::vector<Eigen::ArrayXd> v_;
};

}  // namespace kbc
