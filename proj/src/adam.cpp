#include "dagi/adam.hpp"

#include <cmath>

#include "dagi/errors.hpp"

namespace dagi {

void AdamOptimizer::update(const std::string& name, Matrix& param, const Matrix& grad) {
    if (t_ == 0)
        throw ContractError("adam: update before begin_step");
    if (!param.same_shape(grad))
        throw DimensionError("adam: parameter " + name + " " + param.shape() +
                             " vs gradient " + grad.shape());
    if (!grad.all_finite())
        throw TrainingError("adam: non-finite gradient for parameter " + name);

    Slot& slot = slots_[name];
    if (slot.m.size() == 0) {
        slot.m = Matrix(param.rows(), param.cols());
        slot.v = Matrix(param.rows(), param.cols());
    } else if (!slot.m.same_shape(param)) {
        throw DimensionError("adam: parameter " + name + " changed shape: " +
                             slot.m.shape() + " vs " + param.shape());
    }

    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    double* pm = slot.m.data();
    double* pv = slot.v.data();
    double* pp = param.data();
    const double* pg = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        pm[i] = cfg_.beta1 * pm[i] + (1.0 - cfg_.beta1) * pg[i];
        pv[i] = cfg_.beta2 * pv[i] + (1.0 - cfg_.beta2) * pg[i] * pg[i];
        const double mhat = pm[i] / bc1;
        const double vhat = pv[i] / bc2;
        pp[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

} // namespace dagi
