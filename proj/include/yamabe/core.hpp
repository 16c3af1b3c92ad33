#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace yamabe {

using Vec = Eigen::VectorXd;

// bad user input; pointer is a JSON pointer when the input came from a file
class InputError : public std::invalid_argument {
public:
  explicit InputError(const std::string& what, std::string pointer = "")
      : std::invalid_argument(what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

private:
  std::string pointer_;
};

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Rational {
  long num = 0;
  long den = 1;

  constexpr Rational() = default;
  constexpr Rational(long a, long b) : num(a), den(b) {
    if (den < 0) { num = -num; den = -den; }
    long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }
  constexpr double value() const { return double(num) / double(den); }
  constexpr Rational inverse() const { return {den, num}; }
  friend constexpr Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend constexpr bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
};

struct Exponents {
  int n;
  Rational q;          // (n+2)/(n-2)
  Rational qPrime;     // (n+2)/4
  Rational lengthExp;  // 2/(n-2)

  explicit Exponents(int dim) : n(dim), q(dim + 2, dim - 2), qPrime(dim + 2, 4), lengthExp(2, dim - 2) {
    if (dim < 3 || dim > 5) throw InputError("dimension must be 3, 4 or 5, got " + std::to_string(dim));
  }
  // blow-up rate (n-2)/2 of A d^{-alpha}
  double alpha() const { return 0.5 * (n - 2); }
  // A = (n(n-2)/4)^{(n-2)/4}
  double blowupConstant() const { return std::pow(0.25 * n * (n - 2), 0.25 * (n - 2)); }
};

inline void check_dimension(int n) { Exponents e(n); (void)e; }

// area of the unit sphere S^k in R^{k+1}
inline double sphere_area(int k) {
  return 2.0 * std::pow(M_PI, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

// volume of the unit ball in R^n
inline double ball_volume(int n) { return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

inline double dyadic(int j) { return std::ldexp(1.0, -j); }

}  // namespace yamabe
