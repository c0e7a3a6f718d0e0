#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bico {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// All randomness in the library flows through explicitly passed engines of this type.
using Rng = std::mt19937_64;

/// Raised when a linear-algebra or estimation step cannot produce a finite answer.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid experiment / loop configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned box, lo < hi in every dimension.
class BoxBounds {
public:
    BoxBounds() = default;
    BoxBounds(Vector lo, Vector hi);
    BoxBounds(std::initializer_list<std::pair<double, double>> dims);

    static BoxBounds uniform(int dim, double lo, double hi);

    [[nodiscard]] int dim() const { return static_cast<int>(lo_.size()); }
    [[nodiscard]] const Vector& lo() const { return lo_; }
    [[nodiscard]] const Vector& hi() const { return hi_; }
    [[nodiscard]] double lo(int d) const { return lo_[d]; }
    [[nodiscard]] double hi(int d) const { return hi_[d]; }
    [[nodiscard]] double width(int d) const { return hi_[d] - lo_[d]; }
    [[nodiscard]] Vector widths() const { return hi_ - lo_; }

    [[nodiscard]] bool contains(const Vector& v, double tol = 0.0) const;
    [[nodiscard]] Vector clip(const Vector& v) const;
    [[nodiscard]] Vector midpoint() const { return 0.5 * (lo_ + hi_); }

    /// Concatenation of two boxes (this first).
    [[nodiscard]] BoxBounds join(const BoxBounds& other) const;

private:
    Vector lo_;
    Vector hi_;
};

/// A point of the joint solution/parameter space.
struct JointPoint {
    Vector x;
    Vector a;

    [[nodiscard]] int dim_x() const { return static_cast<int>(x.size()); }
    [[nodiscard]] int dim_a() const { return static_cast<int>(a.size()); }
    [[nodiscard]] Vector joined() const;
    static JointPoint split(const Vector& joined, int dim_x);
};

/// splitmix64 finalizer. Used for every derived seed in the project:
///   mix_seed(base, i) = splitmix64(base ^ splitmix64(i + 0x9E3779B97F4A7C15))
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t z);
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

[[nodiscard]] inline Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

[[nodiscard]] inline std::vector<double> to_std(const Vector& v)
{
    return {v.data(), v.data() + v.size()};
}

} // namespace bico
