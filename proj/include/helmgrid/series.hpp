#pragma once

#include <complex>
#include <vector>

namespace helmgrid {

/// Truncated complex power series in the embedding parameter alpha.
struct PowerSeries {
    std::vector<std::complex<double>> coeffs;

    PowerSeries() = default;
    explicit PowerSeries(std::vector<std::complex<double>> c) : coeffs(std::move(c)) {}
    static PowerSeries constant(std::complex<double> c0, int n_terms);

    int n_terms() const { return static_cast<int>(coeffs.size()); }
    std::complex<double> operator[](int k) const { return coeffs[static_cast<size_t>(k)]; }

    /// Horner evaluation of the truncated sum.
    std::complex<double> eval(double alpha) const;
};

PowerSeries add(const PowerSeries& a, const PowerSeries& b);
PowerSeries sub(const PowerSeries& a, const PowerSeries& b);

/// Cauchy product truncated to max(n_terms) of the inputs.
PowerSeries mul(const PowerSeries& a, const PowerSeries& b);

/// Series of 1/a(alpha); requires a[0] != 0.
PowerSeries reciprocal(const PowerSeries& a);

/// Series of conj(a(conj(alpha))): coefficient-wise conjugation.
PowerSeries conj_reflect(const PowerSeries& a);

}  // namespace helmgrid
