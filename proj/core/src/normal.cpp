#include "binica/normal.hpp"

#include "binica/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace binica::num {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Full n-point rule on [-1, 1] by Newton iteration on P_n.
GaussLegendreRule make_gauss_legendre(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

const GaussLegendreRule& rule_for_correlation(double abs_rho) {
    static const GaussLegendreRule gl6 = make_gauss_legendre(6);
    static const GaussLegendreRule gl12 = make_gauss_legendre(12);
    static const GaussLegendreRule gl20 = make_gauss_legendre(20);
    if (abs_rho < 0.3) {
        return gl6;
    }
    if (abs_rho < 0.75) {
        return gl12;
    }
    return gl20;
}

double halley_refine(double x, double p) {
    if (!std::isfinite(x)) {
        return x;
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    if (!std::isfinite(u)) {
        return x;
    }
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * (0.5 * std::numbers::sqrt2));
}

double normal_ccdf(double x) {
    return 0.5 * std::erfc(x * (0.5 * std::numbers::sqrt2));
}

// Wichura's AS241 (PPND16) followed by one Halley step on the CDF.
double normal_quantile(double p) {
    const double val = normal_quantile_as241(p);
    // The refinement step works on the smaller tail to avoid cancellation.
    if (p > 0.5) {
        return -halley_refine(-val, 1.0 - p);
    }
    return halley_refine(val, p);
}

double normal_quantile_as241(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie in (0, 1)");
    }
    const double q = p - 0.5;
    double val = 0.0;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        val = q *
              (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                    67265.770927008700853) * r + 45921.953931549871457) * r +
                  13731.693765509461125) * r + 1971.5909503065514427) * r +
                133.14166789178437745) * r + 3.387132872796366608) /
              (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                    39307.89580009271061) * r + 21213.794301586595867) * r +
                  5394.1960214247511077) * r + 687.1870074920579083) * r +
                42.313330701600911252) * r + 1.0);
        return val;
    }
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + .0227238449892691845833) * r +
                    .24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                    .0151986665636164571966) * r + .14810397642748007459) * r +
                  .68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                    .0012426609473880784386) * r + .026532189526576123093) * r +
                  .29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  .0148753612908506148525) * r + .13692988092273580531) * r +
                .59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

void Rectangle::validate() const {
    if (lower.size() != upper.size()) {
        throw ParameterError("Rectangle: lower and upper bounds differ in length");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i]) {
            throw ParameterError("Rectangle: lower bound exceeds upper bound");
        }
    }
}

double bvn_upper(double h, double k, double rho) {
    if (h == kInf || k == kInf) {
        return 0.0;
    }
    if (h == -kInf) {
        return k == -kInf ? 1.0 : normal_ccdf(k);
    }
    if (k == -kInf) {
        return normal_ccdf(h);
    }

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const GaussLegendreRule& rule = rule_for_correlation(std::abs(rho));
    const std::size_t points = rule.nodes.size();
    double hk = h * k;
    double bvn = 0.0;

    if (std::abs(rho) < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = std::asin(rho);
        for (std::size_t i = 0; i < points; ++i) {
            const double sn = std::sin(0.5 * asr * (1.0 + rule.nodes[i]));
            bvn += rule.weights[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * two_pi) + normal_ccdf(h) * normal_ccdf(k);
    }

    if (rho < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(rho) < 1.0) {
        const double as = (1.0 - rho) * (1.0 + rho);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-0.5 * (bs / as + hk)) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-0.5 * hk) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a *= 0.5;
        for (std::size_t i = 0; i < points; ++i) {
            const double xs = std::pow(a * (1.0 + rule.nodes[i]), 2);
            const double rs = std::sqrt(1.0 - xs);
            bvn += a * rule.weights[i] *
                   (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                    std::exp(-0.5 * (bs / xs + hk)) * (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / two_pi;
    }
    if (rho > 0.0) {
        return bvn + normal_ccdf(std::max(h, k));
    }
    bvn = -bvn;
    if (k > h) {
        if (h < 0.0) {
            bvn += normal_cdf(k) - normal_cdf(h);
        } else {
            bvn += normal_ccdf(h) - normal_ccdf(k);
        }
    }
    return std::max(bvn, 0.0);
}

double bvn_rectangle_prob(const Rectangle& rect, const Eigen::Vector2d& mean, double corr) {
    if (rect.dim() != 2) {
        throw DimensionError("bvn_rectangle_prob: rectangle must be two-dimensional");
    }
    rect.validate();
    if (!(std::abs(corr) < 1.0)) {
        throw std::domain_error("bvn_rectangle_prob: |corr| must be < 1");
    }

    // Work with bounds of the form "X > lo" wherever possible: a dimension
    // bounded only from above is reflected, so every cell of a sign pattern is
    // a single upper-orthant evaluation instead of a difference.
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
    double rho = corr;
    for (int d = 0; d < 2; ++d) {
        lo[d] = rect.lower[d] - mean[d];
        hi[d] = rect.upper[d] - mean[d];
        if (lo[d] == -kInf && hi[d] != kInf) {
            lo[d] = -hi[d];
            hi[d] = kInf;
            rho = -rho;
        }
    }
    double p = bvn_upper(lo[0], lo[1], rho);
    if (hi[0] != kInf) {
        p -= bvn_upper(hi[0], lo[1], rho);
    }
    if (hi[1] != kInf) {
        p -= bvn_upper(lo[0], hi[1], rho);
    }
    if (hi[0] != kInf && hi[1] != kInf) {
        p += bvn_upper(hi[0], hi[1], rho);
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace binica::num
