#ifndef TORUSFOL_CORE_HPP
#define TORUSFOL_CORE_HPP

#include <charconv>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace torusfol {

//// Scalar and dense types, templated on the real field
template <typename Real> using Complex = std::complex<Real>;

template <typename Real> using CMat = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real> using CVec = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using IVec = std::vector<int>;

template <typename Real> inline constexpr Real two_pi = Real(2) * std::numbers::pi_v<Real>;

//// Errors

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    const std::string& kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

/// Malformed or invariant-violating input.
class InvalidInput : public Error {
  public:
    explicit InvalidInput(const std::string& what) : Error("invalid_input", what) {}
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
  public:
    explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// Request exceeds a configured capability limit.
class CapabilityError : public Error {
  public:
    explicit CapabilityError(const std::string& what) : Error("capability", what) {}
};

/// An exactly vanishing small divisor was met.
class ResonanceError : public Error {
  public:
    ResonanceError(const std::string& what, IVec P, IVec Q, int j)
        : Error("resonance", what), P_(std::move(P)), Q_(std::move(Q)), j_(j) {}
    const IVec& P() const noexcept { return P_; }
    const IVec& Q() const noexcept { return Q_; }
    int j() const noexcept { return j_; }

  private:
    IVec P_, Q_;
    int j_;
};

/// Cohomological data fails the compatibility identities.
class CompatibilityError : public Error {
  public:
    CompatibilityError(const std::string& what, double residual)
        : Error("compatibility", what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

//// Formatting

/// Shortest decimal string that round-trips to the same value.
template <typename Real> std::string format_real(Real x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

template <typename Real> Real parse_real(const std::string& s) {
    Real x{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+')
        ++first;
    auto res = std::from_chars(first, last, x);
    if (res.ec != std::errc() || res.ptr != last)
        throw InvalidInput("not a real number: '" + s + "'");
    return x;
}

inline std::string format_ivec(const IVec& v, char sep = ' ') {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

inline int norm1(const IVec& v) {
    int s = 0;
    for (int x : v)
        s += x < 0 ? -x : x;
    return s;
}

inline int norm_inf(const IVec& v) {
    int s = 0;
    for (int x : v)
        s = std::max(s, x < 0 ? -x : x);
    return s;
}

} // namespace torusfol

#endif // TORUSFOL_CORE_HPP
