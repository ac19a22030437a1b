// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/quantize.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qkdfl {

void QuantConfig::validate() const {
    if (q < 2 || q > 32) {
        throw std::invalid_argument("QuantConfig: q must be in [2, 32], got " +
                                    std::to_string(q));
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("QuantConfig: beta must be positive");
    }
    if (headroom < 0 || scale_level() < 1) {
        throw std::invalid_argument(
            "QuantConfig: headroom leaves no usable levels");
    }
}

double clip(double s, double beta) {
    if (!(beta > 0.0)) {
        throw std::invalid_argument("clip: beta must be positive");
    }
    return std::min(std::max(s, -beta), beta);
}

int64_t quantize_scalar(double s, const QuantConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(s)) {
        throw std::domain_error("quantize_scalar: non-finite input");
    }
    if (std::abs(s) > cfg.beta * (1.0 + 1e-12)) {
        throw std::domain_error("quantize_scalar: |s| exceeds beta; clip first");
    }
    const double mag = std::abs(s) * static_cast<double>(cfg.scale_level()) /
                       cfg.beta;
    const auto level = static_cast<int64_t>(std::floor(mag + 0.5));
    return s < 0.0 ? -level : level;
}

double dequantize_scalar(int64_t v, const QuantConfig& cfg) {
    cfg.validate();
    if (v > cfg.max_level() || v < -cfg.max_level()) {
        throw std::domain_error("dequantize_scalar: level out of range");
    }
    const double mag = static_cast<double>(std::abs(v)) * cfg.beta /
                       static_cast<double>(cfg.scale_level());
    return v < 0 ? -mag : mag;
}

int64_t decode_residue(uint64_t u, int q) {
    if (q < 2 || q > 32) {
        throw std::invalid_argument("decode_residue: q must be in [2, 32]");
    }
    if (u >= (uint64_t{1} << q)) {
        throw std::domain_error("decode_residue: residue exceeds q bits");
    }
    const uint64_t half = uint64_t{1} << (q - 1);
    if (u < half) {
        return static_cast<int64_t>(u);
    }
    return static_cast<int64_t>(u) - (int64_t{1} << q);
}

std::vector<int64_t> quantize_vector(std::span<const double> v,
                                     const QuantConfig& cfg) {
    if (v.empty()) {
        throw std::domain_error("quantize_vector: empty input");
    }
    std::vector<int64_t> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = quantize_scalar(v[i], cfg);
    }
    return out;
}

std::vector<double> dequantize_vector(std::span<const int64_t> v,
                                      const QuantConfig& cfg) {
    if (v.empty()) {
        throw std::domain_error("dequantize_vector: empty input");
    }
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = dequantize_scalar(v[i], cfg);
    }
    return out;
}

} // namespace qkdfl
