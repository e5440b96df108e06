#include "helmgrid/series.hpp"

#include <algorithm>
#include <cassert>

namespace helmgrid {

using Cx = std::complex<double>;

PowerSeries PowerSeries::constant(Cx c0, int n_terms) {
    PowerSeries s;
    s.coeffs.assign(static_cast<size_t>(n_terms), Cx{0.0, 0.0});
    if (n_terms > 0) s.coeffs[0] = c0;
    return s;
}

Cx PowerSeries::eval(double alpha) const {
    Cx acc{0.0, 0.0};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * alpha + *it;
    return acc;
}

PowerSeries add(const PowerSeries& a, const PowerSeries& b) {
    PowerSeries r;
    r.coeffs.resize(std::max(a.coeffs.size(), b.coeffs.size()));
    for (size_t k = 0; k < r.coeffs.size(); ++k) {
        Cx v{0.0, 0.0};
        if (k < a.coeffs.size()) v += a.coeffs[k];
        if (k < b.coeffs.size()) v += b.coeffs[k];
        r.coeffs[k] = v;
    }
    return r;
}

PowerSeries sub(const PowerSeries& a, const PowerSeries& b) {
    PowerSeries nb = b;
    for (auto& c : nb.coeffs) c = -c;
    return add(a, nb);
}

PowerSeries mul(const PowerSeries& a, const PowerSeries& b) {
    PowerSeries r;
    size_t n = std::max(a.coeffs.size(), b.coeffs.size());
    r.coeffs.assign(n, Cx{0.0, 0.0});
    for (size_t i = 0; i < a.coeffs.size(); ++i) {
        for (size_t j = 0; j < b.coeffs.size() && i + j < n; ++j) {
            r.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
        }
    }
    return r;
}

PowerSeries reciprocal(const PowerSeries& a) {
    assert(!a.coeffs.empty() && std::abs(a.coeffs[0]) > 0.0);
    PowerSeries r;
    r.coeffs.assign(a.coeffs.size(), Cx{0.0, 0.0});
    r.coeffs[0] = 1.0 / a.coeffs[0];
    for (size_t k = 1; k < a.coeffs.size(); ++k) {
        Cx acc{0.0, 0.0};
        for (size_t j = 1; j <= k; ++j) acc += a.coeffs[j] * r.coeffs[k - j];
        r.coeffs[k] = -acc / a.coeffs[0];
    }
    return r;
}

PowerSeries conj_reflect(const PowerSeries& a) {
    PowerSeries r = a;
    for (auto& c : r.coeffs) c = std::conj(c);
    return r;
}

}  // namespace helmgrid
