#pragma once

#include <span>
#include <string>
#include <string_view>

namespace bhlr {

/// Generators of the Bregman divergence family.
enum class GeneratorKind {
  Logistic,       // x log x + (1-x) log(1-x) on [0,1]
  KL,             // x log(x+eps) - x on [0,inf)
  Beta,           // x^(1+b)/(b(1+b)) - x/b on [0,inf)
  ItakuraSaito,   // -log x on (0,inf)
  Inverse,        // 1/x on (0,inf)
  Quadratic,      // (x^2-x)/2 on R
  Exponential,    // exp(x) on R
  DualLogistic,   // log(1+exp(x)) on R
};

struct Interval {
  double lo;
  double hi;
  bool lo_closed;
  bool hi_closed;

  bool contains(double x) const;
};

/// A strictly convex generating function phi together with its parameters.
///
/// `beta` is read only by Beta; `epsilon` only by KL, where it shifts the
/// logarithm to keep phi' finite at 0. `tolerance` widens the domain check:
/// points within `tolerance` of the domain are evaluated at the nearest
/// domain point instead of raising DomainError.
struct GeneratingFunction {
  GeneratorKind kind = GeneratorKind::Quadratic;
  double beta = 1.0;
  double epsilon = 0.0;
  double tolerance = 0.0;

  static GeneratingFunction logistic() { return {GeneratorKind::Logistic}; }
  static GeneratingFunction kl(double eps = 0.0) { return {GeneratorKind::KL, 1.0, eps}; }
  static GeneratingFunction beta_div(double b);
  static GeneratingFunction itakura_saito() { return {GeneratorKind::ItakuraSaito}; }
  static GeneratingFunction inverse() { return {GeneratorKind::Inverse}; }
  static GeneratingFunction quadratic() { return {GeneratorKind::Quadratic}; }
  static GeneratingFunction exponential() { return {GeneratorKind::Exponential}; }
  static GeneratingFunction dual_logistic() { return {GeneratorKind::DualLogistic}; }
};

/// Default KL offset used when a config selects plain "kl".
inline constexpr double kDefaultKlEpsilon = 1e-4;

/// Parses "logistic", "kl", "kl:<eps>", "beta:<b>", "itakura-saito",
/// "inverse", "quadratic", "exponential" or "dual-logistic".
GeneratingFunction parse_generating_function(std::string_view key);
std::string to_key(const GeneratingFunction& g);

Interval domain(const GeneratingFunction& g);
bool in_domain(const GeneratingFunction& g, double x);

double phi(const GeneratingFunction& g, double x);
double phi_grad(const GeneratingFunction& g, double x);
double phi_hess(const GeneratingFunction& g, double x);

/// d_phi(a, b) = phi(a) - phi(b) - phi'(b)(a - b).
double d_phi(const GeneratingFunction& g, double a, double b);

/// Mean of d_phi over paired entries.
double big_D(const GeneratingFunction& g, std::span<const double> a, std::span<const double> b);

struct ExpFamilyCoeffs {
  double zeta1;  // phi'(mu)
  double zeta2;  // phi(mu) - mu phi'(mu)
};

ExpFamilyCoeffs exp_family_coeffs(const GeneratingFunction& g, double mu);

}  // namespace bhlr
