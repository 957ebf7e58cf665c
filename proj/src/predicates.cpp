#include "cliffhull/predicates.hpp"

#include <cfloat>
#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace cliffhull {

namespace {

using Rational = boost::multiprecision::cpp_rational;

// det4 by 2x2 Laplace expansion along the top two rows; alongside it the same
// expansion over absolute values, which bounds the magnitude flowing through
// the computation and hence the rounding error.
struct Det4 {
    double det;
    double mag;
};

inline Det4 det4_with_mag(const double r[4][4]) {
    double s[6], sm[6], t[6], tm[6];
    static constexpr int ci[6] = {0, 0, 0, 1, 1, 2};
    static constexpr int cj[6] = {1, 2, 3, 2, 3, 3};
    for (int k = 0; k < 6; ++k) {
        const int i = ci[k], j = cj[k];
        s[k] = r[0][i] * r[1][j] - r[0][j] * r[1][i];
        sm[k] = std::abs(r[0][i] * r[1][j]) + std::abs(r[0][j] * r[1][i]);
        t[k] = r[2][i] * r[3][j] - r[2][j] * r[3][i];
        tm[k] = std::abs(r[2][i] * r[3][j]) + std::abs(r[2][j] * r[3][i]);
    }
    const double det = s[0] * t[5] - s[1] * t[4] + s[2] * t[3] + s[3] * t[2] - s[4] * t[1] + s[5] * t[0];
    const double mag = sm[0] * tm[5] + sm[1] * tm[4] + sm[2] * tm[3] + sm[3] * tm[2] + sm[4] * tm[1] + sm[5] * tm[0];
    return {det, mag};
}

int exact_orient4d(const Point4& a, const Point4& b, const Point4& c,
                   const Point4& d, const Point4& e) {
    Rational r[4][4];
    const Point4* rows[4] = {&b, &c, &d, &e};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            r[i][j] = Rational(rows[i]->x[static_cast<std::size_t>(j)]) -
                      Rational(a.x[static_cast<std::size_t>(j)]);

    static constexpr int ci[6] = {0, 0, 0, 1, 1, 2};
    static constexpr int cj[6] = {1, 2, 3, 2, 3, 3};
    Rational s[6], t[6];
    for (int k = 0; k < 6; ++k) {
        const int i = ci[k], j = cj[k];
        s[k] = r[0][i] * r[1][j] - r[0][j] * r[1][i];
        t[k] = r[2][i] * r[3][j] - r[2][j] * r[3][i];
    }
    const Rational det = s[0] * t[5] - s[1] * t[4] + s[2] * t[3] + s[3] * t[2] - s[4] * t[1] + s[5] * t[0];
    return det.sign();
}

} // namespace

double orient4d_double(const Point4& a, const Point4& b, const Point4& c,
                       const Point4& d, const Point4& e) {
    double r[4][4];
    const Point4* rows[4] = {&b, &c, &d, &e};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            r[i][j] = (*rows[i])[j] - a[j];
    return det4_with_mag(r).det;
}

int orient4d_sign(const Point4& a, const Point4& b, const Point4& c,
                  const Point4& d, const Point4& e) {
    double r[4][4];
    const Point4* rows[4] = {&b, &c, &d, &e};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            r[i][j] = (*rows[i])[j] - a[j];
    const Det4 v = det4_with_mag(r);
    // Error sources: ~11u through the 2x2 expansion plus ~4u first-order from
    // the rounded point differences, both bounded by multiples of mag (the
    // permanent of absolute values). 16*DBL_EPSILON = 32u leaves a margin of 2x.
    const double bound = 16.0 * DBL_EPSILON * v.mag;
    if (v.det > bound) return 1;
    if (v.det < -bound) return -1;
    return exact_orient4d(a, b, c, d, e);
}

struct ExactRank4::Impl {
    std::vector<std::array<Rational, 4>> rows; // echelon, each with a leading column
    std::vector<int> lead;
};

ExactRank4::ExactRank4() : impl_(new Impl) {}
ExactRank4::~ExactRank4() = default;

int ExactRank4::rank() const { return static_cast<int>(impl_->rows.size()); }

bool ExactRank4::try_add(const std::array<double, 4>& dir) {
    std::array<Rational, 4> v;
    for (int j = 0; j < 4; ++j) v[static_cast<std::size_t>(j)] = Rational(dir[static_cast<std::size_t>(j)]);
    for (std::size_t k = 0; k < impl_->rows.size(); ++k) {
        const int l = impl_->lead[k];
        if (v[static_cast<std::size_t>(l)] == 0) continue;
        const Rational f = v[static_cast<std::size_t>(l)] / impl_->rows[k][static_cast<std::size_t>(l)];
        for (int j = 0; j < 4; ++j)
            v[static_cast<std::size_t>(j)] -= f * impl_->rows[k][static_cast<std::size_t>(j)];
    }
    int l = -1;
    for (int j = 0; j < 4; ++j)
        if (v[static_cast<std::size_t>(j)] != 0) { l = j; break; }
    if (l < 0) return false;
    impl_->rows.push_back(std::move(v));
    impl_->lead.push_back(l);
    return true;
}

} // namespace cliffhull
