// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qkdfl/rng.hpp"
#include "qkdfl/statevector.hpp"

namespace qkdfl {

/// Flat-vector optimizer; Adam state is reset at the start of every round so
/// rounds stay independent.
class Optimizer {
  public:
    Optimizer(std::string kind, double lr, size_t dim);

    void reset();
    void step(std::vector<double>& params, std::span<const double> grad);

    [[nodiscard]] const std::string& kind() const { return kind_; }

  private:
    std::string kind_; // "adam" or "sgd"
    double lr_;
    std::vector<double> m_;
    std::vector<double> v_;
    uint64_t t_ = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

/**
 * @brief Uniform interface the federated loop drives.
 *
 * An adapter owns its model parameters, its optimizer, a local training set
 * and (for the server-side instance) a test set. get/set of the flat
 * parameter vector is an exact identity round trip.
 */
class ModelAdapter {
  public:
    virtual ~ModelAdapter() = default;

    [[nodiscard]] virtual size_t param_count() const = 0;
    [[nodiscard]] virtual std::vector<double> get_params() const = 0;
    virtual void set_params(std::span<const double> params) = 0;
    virtual void reset_optimizer() = 0;

    /// One epoch of mini-batch training over the bound local data.
    virtual void train_epoch(size_t batch_size, Rng& rng) = 0;

    /// Accuracy/loss over the bound test set.
    [[nodiscard]] virtual EvalResult evaluate_test() const = 0;

    [[nodiscard]] virtual size_t local_sample_count() const = 0;
};

/// Quantum dataset already embedded for circuit input.
struct QuantumData {
    std::vector<PureState> inputs;
    std::vector<int> labels;
};

/**
 * QNN classifier: hardware-efficient ansatz, prediction = <Z> on the last
 * qubit, squared-error loss against labels in {-1, +1}, parameter-shift
 * gradients. Classification by the sign of the prediction; an exact zero
 * counts as an error.
 */
class QnnModel final : public ModelAdapter {
  public:
    QnnModel(HeaCircuit circuit, std::shared_ptr<const QuantumData> train,
             std::shared_ptr<const QuantumData> test,
             const std::string& optimizer, double lr, Rng& init_rng,
             double init_scale = 0.1);

    [[nodiscard]] size_t param_count() const override {
        return params_.size();
    }
    [[nodiscard]] std::vector<double> get_params() const override {
        return params_;
    }
    void set_params(std::span<const double> params) override;
    void reset_optimizer() override { opt_.reset(); }
    void train_epoch(size_t batch_size, Rng& rng) override;
    [[nodiscard]] EvalResult evaluate_test() const override;
    [[nodiscard]] size_t local_sample_count() const override {
        return train_ ? train_->inputs.size() : 0;
    }

    [[nodiscard]] double predict(const PureState& input) const;

  private:
    HeaCircuit circuit_;
    std::vector<double> params_;
    std::shared_ptr<const QuantumData> train_;
    std::shared_ptr<const QuantumData> test_;
    Optimizer opt_;
};

/// Plain classical dataset (flat feature vectors, digit labels 0..9).
struct VectorData {
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
};

/**
 * Two-layer MLP (input -> hidden ReLU -> softmax) with cross-entropy loss;
 * the desk-scale stand-in for a larger convolutional model in the
 * scalability experiments.
 */
class MlpModel final : public ModelAdapter {
  public:
    MlpModel(size_t input_dim, size_t hidden, size_t classes,
             std::shared_ptr<const VectorData> train,
             std::shared_ptr<const VectorData> test,
             const std::string& optimizer, double lr, Rng& init_rng);

    [[nodiscard]] size_t param_count() const override;
    [[nodiscard]] std::vector<double> get_params() const override;
    void set_params(std::span<const double> params) override;
    void reset_optimizer() override { opt_.reset(); }
    void train_epoch(size_t batch_size, Rng& rng) override;
    [[nodiscard]] EvalResult evaluate_test() const override;
    [[nodiscard]] size_t local_sample_count() const override {
        return train_ ? train_->x.size() : 0;
    }

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    std::shared_ptr<const VectorData> train_;
    std::shared_ptr<const VectorData> test_;
    Optimizer opt_;
};

/**
 * Synthetic strongly convex quadratic f(theta) = 1/2 sum lambda_i theta_i^2
 * with additive Gaussian gradient noise of total variance sigma^2 per sample
 * (so sigma^2 / batch after mini-batch averaging). One "epoch" is one SGD
 * step, matching the local-iteration count of the convergence analysis.
 */
class QuadraticModel final : public ModelAdapter {
  public:
    QuadraticModel(std::vector<double> lambdas, double sigma_sq, double lr,
                   std::span<const double> theta0);

    [[nodiscard]] size_t param_count() const override {
        return theta_.size();
    }
    [[nodiscard]] std::vector<double> get_params() const override {
        return theta_;
    }
    void set_params(std::span<const double> params) override;
    void reset_optimizer() override {}
    void train_epoch(size_t batch_size, Rng& rng) override;
    [[nodiscard]] EvalResult evaluate_test() const override;
    [[nodiscard]] size_t local_sample_count() const override { return 1; }

    [[nodiscard]] double loss() const;

  private:
    std::vector<double> lambdas_;
    double sigma_sq_;
    double lr_;
    std::vector<double> theta_;
};

} // namespace qkdfl
