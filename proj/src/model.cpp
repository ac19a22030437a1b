// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace qkdfl {

Optimizer::Optimizer(std::string kind, double lr, size_t dim)
    : kind_(std::move(kind)), lr_(lr), m_(dim, 0.0), v_(dim, 0.0) {
    if (kind_ != "adam" && kind_ != "sgd") {
        throw std::invalid_argument("Optimizer: kind must be adam or sgd");
    }
    if (!(lr_ > 0.0)) {
        throw std::invalid_argument("Optimizer: learning rate must be > 0");
    }
}

void Optimizer::reset() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    t_ = 0;
}

void Optimizer::step(std::vector<double>& params,
                     std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw std::invalid_argument("Optimizer: dimension mismatch");
    }
    if (kind_ == "sgd") {
        for (size_t i = 0; i < params.size(); ++i) {
            params[i] -= lr_ * grad[i];
        }
        return;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
        v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps);
    }
}

namespace {

std::vector<size_t> shuffled_indices(size_t count, Rng& rng) {
    return rng.permutation(count);
}

} // namespace

QnnModel::QnnModel(HeaCircuit circuit, std::shared_ptr<const QuantumData> train,
                   std::shared_ptr<const QuantumData> test,
                   const std::string& optimizer, double lr, Rng& init_rng,
                   double init_scale)
    : circuit_(circuit), params_(circuit.param_count()),
      train_(std::move(train)), test_(std::move(test)),
      opt_(optimizer, lr, circuit.param_count()) {
    for (auto& p : params_) {
        p = init_scale * init_rng.normal();
    }
}

void QnnModel::set_params(std::span<const double> params) {
    if (params.size() != params_.size()) {
        throw std::invalid_argument("QnnModel::set_params: size mismatch");
    }
    params_.assign(params.begin(), params.end());
}

double QnnModel::predict(const PureState& input) const {
    return expect_z_last(apply_hea(input, circuit_, params_));
}

void QnnModel::train_epoch(size_t batch_size, Rng& rng) {
    if (!train_ || train_->inputs.empty()) {
        throw std::runtime_error("QnnModel: no local training data");
    }
    const std::vector<size_t> order = shuffled_indices(train_->inputs.size(),
                                                       rng);
    std::vector<double> grad(params_.size());
    for (size_t start = 0; start < order.size(); start += batch_size) {
        const size_t end = std::min(order.size(), start + batch_size);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (size_t k = start; k < end; ++k) {
            const size_t idx = order[k];
            const std::vector<double> g = parameter_shift_grad(
                circuit_, train_->inputs[idx],
                static_cast<double>(train_->labels[idx]), params_);
            for (size_t i = 0; i < grad.size(); ++i) {
                grad[i] += g[i];
            }
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        for (auto& g : grad) {
            g *= inv;
        }
        opt_.step(params_, grad);
    }
}

EvalResult QnnModel::evaluate_test() const {
    if (!test_ || test_->inputs.empty()) {
        throw std::runtime_error("QnnModel: no test data bound");
    }
    EvalResult res;
    size_t correct = 0;
    double loss = 0.0;
    for (size_t i = 0; i < test_->inputs.size(); ++i) {
        const double pred = predict(test_->inputs[i]);
        const double y = test_->labels[i];
        loss += (pred - y) * (pred - y);
        if ((pred > 0.0 && y > 0.0) || (pred < 0.0 && y < 0.0)) {
            ++correct; // exact zero counts as an error
        }
    }
    res.accuracy = static_cast<double>(correct) /
                   static_cast<double>(test_->inputs.size());
    res.loss = loss / static_cast<double>(test_->inputs.size());
    return res;
}

struct MlpModel::Impl {
    size_t input_dim;
    size_t hidden;
    size_t classes;
    Eigen::MatrixXd w1; // hidden x input
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2; // classes x hidden
    Eigen::VectorXd b2;

    [[nodiscard]] size_t count() const {
        return static_cast<size_t>(w1.size() + b1.size() + w2.size() +
                                   b2.size());
    }
};

MlpModel::MlpModel(size_t input_dim, size_t hidden, size_t classes,
                   std::shared_ptr<const VectorData> train,
                   std::shared_ptr<const VectorData> test,
                   const std::string& optimizer, double lr, Rng& init_rng)
    : impl_(std::make_shared<Impl>()), train_(std::move(train)),
      test_(std::move(test)),
      opt_(optimizer, lr,
           hidden * input_dim + hidden + classes * hidden + classes) {
    impl_->input_dim = input_dim;
    impl_->hidden = hidden;
    impl_->classes = classes;
    impl_->w1.resize(static_cast<Eigen::Index>(hidden),
                     static_cast<Eigen::Index>(input_dim));
    impl_->b1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden));
    impl_->w2.resize(static_cast<Eigen::Index>(classes),
                     static_cast<Eigen::Index>(hidden));
    impl_->b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
    const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    const double s2 = std::sqrt(2.0 / static_cast<double>(hidden));
    for (Eigen::Index i = 0; i < impl_->w1.size(); ++i) {
        impl_->w1.data()[i] = s1 * init_rng.normal();
    }
    for (Eigen::Index i = 0; i < impl_->w2.size(); ++i) {
        impl_->w2.data()[i] = s2 * init_rng.normal();
    }
}

size_t MlpModel::param_count() const { return impl_->count(); }

std::vector<double> MlpModel::get_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    const auto append = [&out](const double* p, size_t n) {
        out.insert(out.end(), p, p + n);
    };
    append(impl_->w1.data(), static_cast<size_t>(impl_->w1.size()));
    append(impl_->b1.data(), static_cast<size_t>(impl_->b1.size()));
    append(impl_->w2.data(), static_cast<size_t>(impl_->w2.size()));
    append(impl_->b2.data(), static_cast<size_t>(impl_->b2.size()));
    return out;
}

void MlpModel::set_params(std::span<const double> params) {
    if (params.size() != param_count()) {
        throw std::invalid_argument("MlpModel::set_params: size mismatch");
    }
    const double* p = params.data();
    const auto take = [&p](double* dst, size_t n) {
        std::copy(p, p + n, dst);
        p += n;
    };
    take(impl_->w1.data(), static_cast<size_t>(impl_->w1.size()));
    take(impl_->b1.data(), static_cast<size_t>(impl_->b1.size()));
    take(impl_->w2.data(), static_cast<size_t>(impl_->w2.size()));
    take(impl_->b2.data(), static_cast<size_t>(impl_->b2.size()));
}

namespace {

// Column-wise softmax in place.
void softmax_columns(Eigen::MatrixXd& logits) {
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        auto col = logits.col(c);
        col.array() -= col.maxCoeff();
        col = col.array().exp();
        col /= col.sum();
    }
}

} // namespace

void MlpModel::train_epoch(size_t batch_size, Rng& rng) {
    if (!train_ || train_->x.empty()) {
        throw std::runtime_error("MlpModel: no local training data");
    }
    const std::vector<size_t> order = rng.permutation(train_->x.size());
    const auto in_dim = static_cast<Eigen::Index>(impl_->input_dim);
    std::vector<double> flat_grad(param_count());
    for (size_t start = 0; start < order.size(); start += batch_size) {
        const size_t end = std::min(order.size(), start + batch_size);
        const auto bsz = static_cast<Eigen::Index>(end - start);
        Eigen::MatrixXd x(in_dim, bsz);
        for (Eigen::Index c = 0; c < bsz; ++c) {
            const auto& row = train_->x[order[start + static_cast<size_t>(c)]];
            x.col(c) = Eigen::Map<const Eigen::VectorXd>(row.data(), in_dim);
        }
        Eigen::MatrixXd h = (impl_->w1 * x).colwise() + impl_->b1;
        Eigen::MatrixXd relu = h.cwiseMax(0.0);
        Eigen::MatrixXd probs = (impl_->w2 * relu).colwise() + impl_->b2;
        softmax_columns(probs);
        for (Eigen::Index c = 0; c < bsz; ++c) {
            const int y = train_->labels[order[start + static_cast<size_t>(c)]];
            probs(y, c) -= 1.0;
        }
        probs /= static_cast<double>(bsz);

        const Eigen::MatrixXd dw2 = probs * relu.transpose();
        const Eigen::VectorXd db2 = probs.rowwise().sum();
        Eigen::MatrixXd dh = impl_->w2.transpose() * probs;
        dh = (h.array() > 0.0).select(dh, 0.0);
        const Eigen::MatrixXd dw1 = dh * x.transpose();
        const Eigen::VectorXd db1 = dh.rowwise().sum();

        double* g = flat_grad.data();
        const auto put = [&g](const double* src, size_t n) {
            std::copy(src, src + n, g);
            g += n;
        };
        put(dw1.data(), static_cast<size_t>(dw1.size()));
        put(db1.data(), static_cast<size_t>(db1.size()));
        put(dw2.data(), static_cast<size_t>(dw2.size()));
        put(db2.data(), static_cast<size_t>(db2.size()));

        std::vector<double> params = get_params();
        opt_.step(params, flat_grad);
        set_params(params);
    }
}

EvalResult MlpModel::evaluate_test() const {
    if (!test_ || test_->x.empty()) {
        throw std::runtime_error("MlpModel: no test data bound");
    }
    const auto in_dim = static_cast<Eigen::Index>(impl_->input_dim);
    const auto count = static_cast<Eigen::Index>(test_->x.size());
    Eigen::MatrixXd x(in_dim, count);
    for (Eigen::Index c = 0; c < count; ++c) {
        x.col(c) = Eigen::Map<const Eigen::VectorXd>(
            test_->x[static_cast<size_t>(c)].data(), in_dim);
    }
    Eigen::MatrixXd relu = ((impl_->w1 * x).colwise() + impl_->b1).cwiseMax(0.0);
    Eigen::MatrixXd probs = (impl_->w2 * relu).colwise() + impl_->b2;
    softmax_columns(probs);
    size_t correct = 0;
    double loss = 0.0;
    for (Eigen::Index c = 0; c < count; ++c) {
        Eigen::Index argmax = 0;
        probs.col(c).maxCoeff(&argmax);
        const int y = test_->labels[static_cast<size_t>(c)];
        if (argmax == y) {
            ++correct;
        }
        loss += -std::log(std::max(probs(y, c), 1e-12));
    }
    return {static_cast<double>(correct) / static_cast<double>(count),
            loss / static_cast<double>(count)};
}

QuadraticModel::QuadraticModel(std::vector<double> lambdas, double sigma_sq,
                               double lr, std::span<const double> theta0)
    : lambdas_(std::move(lambdas)), sigma_sq_(sigma_sq), lr_(lr),
      theta_(theta0.begin(), theta0.end()) {
    if (lambdas_.size() != theta_.size() || lambdas_.empty()) {
        throw std::invalid_argument("QuadraticModel: dimension mismatch");
    }
}

void QuadraticModel::set_params(std::span<const double> params) {
    if (params.size() != theta_.size()) {
        throw std::invalid_argument("QuadraticModel::set_params: size mismatch");
    }
    theta_.assign(params.begin(), params.end());
}

void QuadraticModel::train_epoch(size_t batch_size, Rng& rng) {
    // One SGD step per epoch; the mini-batch average of per-sample noise of
    // total variance sigma^2 has per-coordinate variance
    // sigma^2 / (dim * batch).
    const double noise_sd =
        std::sqrt(sigma_sq_ / (static_cast<double>(theta_.size()) *
                               static_cast<double>(batch_size)));
    for (size_t i = 0; i < theta_.size(); ++i) {
        const double g = lambdas_[i] * theta_[i] + noise_sd * rng.normal();
        theta_[i] -= lr_ * g;
    }
}

double QuadraticModel::loss() const {
    double f = 0.0;
    for (size_t i = 0; i < theta_.size(); ++i) {
        f += 0.5 * lambdas_[i] * theta_[i] * theta_[i];
    }
    return f;
}

EvalResult QuadraticModel::evaluate_test() const { return {0.0, loss()}; }

} // namespace qkdfl
