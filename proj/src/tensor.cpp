#include "scod/tensor.hpp"

#include <cmath>

namespace scod {

std::size_t Tensor::count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) {
        if (e == 0)
            throw std::invalid_argument("Tensor: zero extent in shape " + shape_str(s));
        n *= e;
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

Tensor glorot_tensor(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                     Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return uniform_tensor(std::move(shape), -bound, bound, rng);
}

} // namespace scod
