#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace cbfmt {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kPi = 3.14159265358979323846;

// Forward kernel is e^{-i 2 pi n q / size}; inverse carries the 1/size.
ComplexVector dft(std::span<const Complex> v, std::size_t size);
ComplexVector idft(std::span<const Complex> v, std::size_t size);

ComplexVector cyclic_convolve(std::span<const Complex> x, std::span<const Complex> y);

long mod_index(long a, long b);

// out[i] = v[(i + a) mod n]
ComplexVector cyclic_shift(std::span<const Complex> v, long a);

// throws std::invalid_argument on empty or non-finite data
void require_valid(std::span<const Complex> v, const char* what);

/**
 * Mixed-radix decimation-in-time plan. Radices 4, 2, 3, 5 first, then any
 * leftover prime is handled by a generic O(p) butterfly, which degrades to
 * the plain O(n^2) sum for prime n.
 */
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    // in-place, unnormalized
    void forward(Complex* data) const { run(data, false); }
    void inverse(Complex* data) const { run(data, true); }

    // cached plans, safe to call from several threads
    static std::shared_ptr<const FftPlan> get(std::size_t n);

private:
    void run(Complex* data, bool inverse) const;
    void recurse(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                 std::size_t level, bool inverse, Complex* scratch) const;

    std::size_t n_;
    std::vector<std::size_t> factors_;
    std::vector<Complex> twiddle_;  // e^{-i 2 pi j / n}
};

} // namespace cbfmt
