// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/toeplitz.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace qkdfl {

void ToeplitzSeed::validate() const {
    if (n < 2 || r == 0 || r >= n) {
        throw std::invalid_argument("ToeplitzSeed: need 0 < r < n, n >= 2");
    }
    if (bits.size() != n - 1) {
        throw std::invalid_argument("ToeplitzSeed: seed must have n-1 bits");
    }
}

ToeplitzSeed ToeplitzSeed::random(size_t n, size_t r, Rng& rng) {
    ToeplitzSeed seed;
    seed.n = n;
    seed.r = r;
    seed.bits.resize(n - 1);
    for (auto& b : seed.bits) {
        b = rng.bit() ? 1 : 0;
    }
    seed.validate();
    return seed;
}

namespace {

std::vector<uint64_t> pack_bits(std::span<const uint8_t> bits) {
    std::vector<uint64_t> words((bits.size() + 63) / 64, 0);
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            words[i / 64] |= uint64_t{1} << (i % 64);
        }
    }
    return words;
}

// Parity of AND between `a` shifted right by `offset` bits and the first
// `len` bits of `b`.
uint64_t shifted_and_parity(const std::vector<uint64_t>& a, size_t offset,
                            const std::vector<uint64_t>& b, size_t len) {
    const size_t word = offset / 64;
    const unsigned shift = offset % 64;
    uint64_t parity = 0;
    const size_t nwords = (len + 63) / 64;
    for (size_t w = 0; w < nwords; ++w) {
        uint64_t chunk = a[word + w] >> shift;
        if (shift != 0 && word + w + 1 < a.size()) {
            chunk |= a[word + w + 1] << (64 - shift);
        }
        uint64_t m = b[w];
        if (w == nwords - 1 && len % 64 != 0) {
            m &= (uint64_t{1} << (len % 64)) - 1;
        }
        parity ^= chunk & m;
    }
    return static_cast<uint64_t>(std::popcount(parity)) & 1U;
}

} // namespace

std::vector<uint8_t> pa_direct(std::span<const uint8_t> x,
                               const ToeplitzSeed& seed) {
    seed.validate();
    if (x.size() != seed.n) {
        throw std::invalid_argument("pa_direct: input length != n");
    }
    const size_t n = seed.n;
    const size_t r = seed.r;
    const std::vector<uint64_t> v = pack_bits(seed.bits);
    std::vector<uint8_t> tail(x.begin() + static_cast<ptrdiff_t>(r), x.end());
    const std::vector<uint64_t> xt = pack_bits(tail);

    std::vector<uint8_t> y(r);
    for (size_t i = 0; i < r; ++i) {
        // row i of the Toeplitz block is v[r-1-i .. r-1-i+(n-r)).
        const uint64_t dot = shifted_and_parity(v, r - 1 - i, xt, n - r);
        y[i] = static_cast<uint8_t>(x[i] ^ dot);
    }
    return y;
}

namespace {

thread_local bool g_fft_fallback = false;

// One FFTW workspace per transform size, reused across calls. FFTW planning
// is not thread-safe, and the buffers are shared, so execution holds the
// engine lock as well.
class FftEngine {
  public:
    explicit FftEngine(size_t n) : n_(n) {
        in_a_ = fftw_alloc_real(n);
        freq_a_ = fftw_alloc_complex(n / 2 + 1);
        freq_b_ = fftw_alloc_complex(n / 2 + 1);
        const unsigned flags =
            (n & (n - 1)) == 0 && n >= (1u << 16) ? FFTW_MEASURE : FFTW_ESTIMATE;
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_a_, freq_a_, flags);
        inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq_a_, in_a_, flags);
    }
    ~FftEngine() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(in_a_);
        fftw_free(freq_a_);
        fftw_free(freq_b_);
    }
    FftEngine(const FftEngine&) = delete;
    FftEngine& operator=(const FftEngine&) = delete;

    // Cyclic convolution c (*) x, result written back into x.
    void cyclic_convolve(std::vector<double>& c, std::vector<double>& x) {
        std::copy(c.begin(), c.end(), in_a_);
        fftw_execute(fwd_);
        std::memcpy(freq_b_, freq_a_, (n_ / 2 + 1) * sizeof(fftw_complex));
        std::copy(x.begin(), x.end(), in_a_);
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(n_);
        for (size_t k = 0; k < n_ / 2 + 1; ++k) {
            const double re = freq_a_[k][0] * freq_b_[k][0] -
                              freq_a_[k][1] * freq_b_[k][1];
            const double im = freq_a_[k][0] * freq_b_[k][1] +
                              freq_a_[k][1] * freq_b_[k][0];
            freq_a_[k][0] = re * scale;
            freq_a_[k][1] = im * scale;
        }
        fftw_execute(inv_);
        std::copy(in_a_, in_a_ + n_, x.begin());
    }

  private:
    size_t n_;
    double* in_a_;
    fftw_complex* freq_a_;
    fftw_complex* freq_b_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

std::mutex g_engine_mutex;

FftEngine& engine_for(size_t n) {
    static std::map<size_t, std::unique_ptr<FftEngine>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, std::make_unique<FftEngine>(n)).first;
    }
    return *it->second;
}

} // namespace

std::vector<uint8_t> pa_fft(std::span<const uint8_t> x,
                            const ToeplitzSeed& seed) {
    seed.validate();
    if (x.size() != seed.n) {
        throw std::invalid_argument("pa_fft: input length != n");
    }
    g_fft_fallback = false;
    const size_t n = seed.n;
    const size_t r = seed.r;
    const std::vector<uint8_t>& v = seed.bits;

    // First column of the circulant extension: the bottom-right r x (n-r)
    // block of the circulant must reproduce V, which pins every entry except
    // c[n-r] (inside the don't-care fill).
    std::vector<double> c(n, 0.0);
    for (size_t mshift = 0; mshift + r <= n - 1; ++mshift) {
        c[mshift] = v[n - 1 - r - mshift];
    }
    for (size_t k = 1; k < r; ++k) {
        c[n - k] = v[n - 1 - r + k];
    }

    // x with the identity-block coordinates zeroed.
    std::vector<double> xp(n, 0.0);
    for (size_t i = r; i < n; ++i) {
        xp[i] = x[i];
    }

    {
        std::lock_guard lock(g_engine_mutex);
        engine_for(n).cyclic_convolve(c, xp);
    }

    std::vector<uint8_t> y(r);
    for (size_t i = 0; i < r; ++i) {
        const double w = xp[n - r + i];
        const double rounded = std::nearbyint(w);
        if (std::abs(w - rounded) > 0.25) {
            g_fft_fallback = true;
            return pa_direct(x, seed);
        }
        const auto integer = static_cast<int64_t>(rounded);
        y[i] = static_cast<uint8_t>((x[i] ^ (integer & 1)) & 1);
    }
    return y;
}

bool pa_fft_used_fallback() { return g_fft_fallback; }

PipelineResult postprocess_pipeline(const RawKeyPair& pair, double e_est,
                                    const CascadeConfig& cascade_cfg,
                                    size_t final_len, Rng& seed_rng) {
    PipelineResult out;
    out.reconcile = cascade_reconcile(pair, e_est, cascade_cfg);
    if (!out.reconcile.success) {
        return out; // no key emitted
    }
    if (final_len == 0) {
        out.emitted = false;
        return out;
    }
    const size_t n = pair.key_a.size();
    if (final_len >= n) {
        throw std::invalid_argument(
            "postprocess_pipeline: final length must be < raw length");
    }
    const ToeplitzSeed seed = ToeplitzSeed::random(n, final_len, seed_rng);
    out.final_key = pa_fft(out.reconcile.key, seed);
    out.emitted = true;
    return out;
}

} // namespace qkdfl
