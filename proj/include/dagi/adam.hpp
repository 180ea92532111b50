#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dagi/matrix.hpp"

namespace dagi {

/// Adam with bias correction. Moment slots are keyed by parameter name so
/// update order never affects the result; call begin_step() exactly once per
/// optimization step before updating each parameter.
class AdamOptimizer {
public:
    struct Config {
        double lr = 0.01;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    AdamOptimizer() : AdamOptimizer(Config{}) {}
    explicit AdamOptimizer(Config cfg) : cfg_(cfg) {}

    void begin_step() { ++t_; }
    /// Applies one Adam update in place. Throws TrainingError naming the
    /// parameter if the gradient is not finite.
    void update(const std::string& name, Matrix& param, const Matrix& grad);

    std::uint64_t step_count() const { return t_; }
    const Config& config() const { return cfg_; }

private:
    struct Slot {
        Matrix m;
        Matrix v;
    };

    Config cfg_;
    std::uint64_t t_ = 0;
    std::map<std::string, Slot> slots_;
};

} // namespace dagi
