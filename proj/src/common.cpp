#include "bico/common.hpp"

#include <algorithm>
#include <cmath>

namespace bico {

BoxBounds::BoxBounds(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi))
{
    if (lo_.size() != hi_.size()) {
        throw std::invalid_argument("BoxBounds: lo/hi dimension mismatch");
    }
    for (Eigen::Index d = 0; d < lo_.size(); ++d) {
        if (!std::isfinite(lo_[d]) || !std::isfinite(hi_[d]) || !(lo_[d] < hi_[d])) {
            throw std::invalid_argument("BoxBounds: need finite lo < hi in dimension " +
                                        std::to_string(d));
        }
    }
}

BoxBounds::BoxBounds(std::initializer_list<std::pair<double, double>> dims)
{
    Vector lo(static_cast<Eigen::Index>(dims.size()));
    Vector hi(static_cast<Eigen::Index>(dims.size()));
    Eigen::Index d = 0;
    for (const auto& [l, h] : dims) {
        lo[d] = l;
        hi[d] = h;
        ++d;
    }
    *this = BoxBounds(std::move(lo), std::move(hi));
}

BoxBounds BoxBounds::uniform(int dim, double lo, double hi)
{
    return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
}

bool BoxBounds::contains(const Vector& v, double tol) const
{
    if (v.size() != lo_.size()) return false;
    for (Eigen::Index d = 0; d < v.size(); ++d) {
        if (!(v[d] >= lo_[d] - tol && v[d] <= hi_[d] + tol)) return false;
    }
    return true;
}

Vector BoxBounds::clip(const Vector& v) const
{
    return v.cwiseMax(lo_).cwiseMin(hi_);
}

BoxBounds BoxBounds::join(const BoxBounds& other) const
{
    Vector lo(dim() + other.dim());
    Vector hi(dim() + other.dim());
    lo << lo_, other.lo_;
    hi << hi_, other.hi_;
    return {std::move(lo), std::move(hi)};
}

Vector JointPoint::joined() const
{
    Vector out(x.size() + a.size());
    out << x, a;
    return out;
}

JointPoint JointPoint::split(const Vector& joined, int dim_x)
{
    return {joined.head(dim_x), joined.tail(joined.size() - dim_x)};
}

std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream)
{
    return splitmix64(base ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL));
}

} // namespace bico
