#include "cbfmt/transforms.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace cbfmt {

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("fft size must be positive");
    std::size_t rest = n;
    for (std::size_t p : {4u, 2u, 3u, 5u}) {
        while (rest % p == 0) {
            factors_.push_back(p);
            rest /= p;
        }
    }
    for (std::size_t p = 7; p * p <= rest; p += 2) {
        while (rest % p == 0) {
            factors_.push_back(p);
            rest /= p;
        }
    }
    if (rest > 1) factors_.push_back(rest);

    twiddle_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double a = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
        twiddle_[j] = {std::cos(a), std::sin(a)};
    }
}

void FftPlan::run(Complex* data, bool inverse) const {
    if (n_ == 1) return;
    std::vector<Complex> in(data, data + n_);
    std::size_t pmax = 0;
    for (auto p : factors_) pmax = std::max(pmax, p);
    std::vector<Complex> scratch(pmax);
    recurse(in.data(), 1, data, n_, 0, inverse, scratch.data());
}

// sub-transform of length n over in[0], in[stride], ... written contiguously to out
void FftPlan::recurse(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                      std::size_t level, bool inverse, Complex* scratch) const {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = factors_[level];
    const std::size_t m = n / p;
    for (std::size_t q = 0; q < p; ++q)
        recurse(in + q * stride, stride * p, out + q * m, m, level + 1, inverse, scratch);

    const std::size_t tw_step = n_ / n;  // W_n^j = twiddle_[j * tw_step]
    auto tw = [&](std::size_t j) {
        Complex w = twiddle_[(j % n) * tw_step];
        return inverse ? std::conj(w) : w;
    };

    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t q = 0; q < p; ++q) scratch[q] = out[q * m + k] * tw(q * k);
        if (p == 2) {
            out[k] = scratch[0] + scratch[1];
            out[k + m] = scratch[0] - scratch[1];
        } else if (p == 4) {
            Complex t0 = scratch[0] + scratch[2], t1 = scratch[0] - scratch[2];
            Complex t2 = scratch[1] + scratch[3], t3 = scratch[1] - scratch[3];
            // multiply t3 by -i (forward) or +i (inverse)
            Complex t3r = inverse ? Complex(-t3.imag(), t3.real()) : Complex(t3.imag(), -t3.real());
            out[k] = t0 + t2;
            out[k + m] = t1 + t3r;
            out[k + 2 * m] = t0 - t2;
            out[k + 3 * m] = t1 - t3r;
        } else {
            for (std::size_t r = 0; r < p; ++r) {
                Complex acc = scratch[0];
                for (std::size_t q = 1; q < p; ++q) acc += scratch[q] * tw((q * r % p) * m);
                out[k + r * m] = acc;
            }
        }
    }
}

std::shared_ptr<const FftPlan> FftPlan::get(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto plan = std::make_shared<const FftPlan>(n);
    cache.emplace(n, plan);
    return plan;
}

void require_valid(std::span<const Complex> v, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty vector");
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

ComplexVector dft(std::span<const Complex> v, std::size_t size) {
    if (size != v.size() || size == 0)
        throw std::invalid_argument("dft: size " + std::to_string(size) + " does not match length " +
                                    std::to_string(v.size()));
    ComplexVector out(v.begin(), v.end());
    FftPlan::get(size)->forward(out.data());
    return out;
}

ComplexVector idft(std::span<const Complex> v, std::size_t size) {
    if (size != v.size() || size == 0)
        throw std::invalid_argument("idft: size " + std::to_string(size) + " does not match length " +
                                    std::to_string(v.size()));
    ComplexVector out(v.begin(), v.end());
    FftPlan::get(size)->inverse(out.data());
    const double s = 1.0 / static_cast<double>(size);
    for (auto& z : out) z *= s;
    return out;
}

ComplexVector cyclic_convolve(std::span<const Complex> x, std::span<const Complex> y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("cyclic_convolve: length mismatch");
    const std::size_t n = x.size();
    ComplexVector X = dft(x, n), Y = dft(y, n);
    for (std::size_t q = 0; q < n; ++q) X[q] *= Y[q];
    return idft(X, n);
}

long mod_index(long a, long b) {
    if (b <= 0) throw std::invalid_argument("mod_index: modulus must be positive");
    long r = a % b;
    return r < 0 ? r + b : r;
}

ComplexVector cyclic_shift(std::span<const Complex> v, long a) {
    const long n = static_cast<long>(v.size());
    ComplexVector out(v.size());
    if (n == 0) return out;
    for (long i = 0; i < n; ++i) out[i] = v[mod_index(i + a, n)];
    return out;
}

} // namespace cbfmt
