#include "binica/error.hpp"
#include "binica/optim.hpp"

#include <algorithm>
#include <cmath>

namespace binica::optim {

double check_gradient(const Objective& objective, const Vector& x, double step) {
    if (!(step > 0.0)) {
        throw ParameterError("check_gradient: step must be positive");
    }
    const Vector analytic = objective(x).gradient;
    if (analytic.size() != x.size()) {
        throw DimensionError("check_gradient: gradient length differs from parameter length");
    }
    double worst = 0.0;
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + step;
        const double up = objective(probe).value;
        probe[i] = x[i] - step;
        const double down = objective(probe).value;
        probe[i] = x[i];
        const double numeric = (up - down) / (2.0 * step);
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace binica::optim
