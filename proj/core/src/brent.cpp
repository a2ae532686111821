#include "binica/error.hpp"
#include "binica/optim.hpp"

#include <cmath>
#include <limits>

namespace binica::optim {

BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (!(lo < hi)) {
        throw ParameterError("brent_minimize: need lo < hi");
    }
    constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt(5)) / 2
    constexpr double kEps = 1e-15;
    const auto eval = [&](double x) {
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    double a = lo;
    double b = hi;
    double x = a + kGolden * (b - a);
    double w = x;
    double v = x;
    double fx = eval(x);
    double fw = fx;
    double fv = fx;
    double d = 0.0;
    double e = 0.0;
    int evaluations = 1;

    for (int iter = 0; iter < 500; ++iter) {
        const double m = 0.5 * (a + b);
        const double tol1 = kEps * std::abs(x) + tol / 3.0;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) {
            break;
        }
        bool golden = true;
        if (std::abs(e) > tol1) {
            // Parabola through x, w, v.
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) {
                p = -p;
            } else {
                q = -q;
            }
            const double e_prev = e;
            if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
                e = d;
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) {
                    d = x < m ? tol1 : -tol1;
                }
                golden = false;
            }
        }
        if (golden) {
            e = (x < m ? b : a) - x;
            d = kGolden * e;
        }
        double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
        u = std::min(std::max(u, lo), hi);
        const double fu = eval(u);
        ++evaluations;
        if (fu <= fx) {
            (u < x ? b : a) = x;
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            (u < x ? a : b) = u;
            if (fu <= fw || w == x) {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    return {x, fx, evaluations};
}

}  // namespace binica::optim
