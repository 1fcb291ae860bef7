#include "bhlr/divergence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "bhlr/errors.hpp"

namespace bhlr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const GeneratingFunction& g) { return to_key(g); }

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// a log(a / b) with the 0 log 0 = 0 convention.
double xlog_ratio(double a, double b) { return a == 0.0 ? 0.0 : a * std::log(a / b); }

double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

// Maps x into the domain, honouring the configured tolerance.
double admit(const GeneratingFunction& g, double x, const char* what) {
  if (std::isnan(x)) throw DomainError(std::string(what) + ": NaN argument for " + describe(g));
  const Interval d = domain(g);
  if (d.contains(x)) return x;
  if (g.tolerance > 0.0) {
    if (x < d.lo && d.lo - x <= g.tolerance && d.lo_closed) return d.lo;
    if (x > d.hi && x - d.hi <= g.tolerance && d.hi_closed) return d.hi;
  }
  std::ostringstream os;
  os << what << ": " << x << " outside dom(phi) of " << describe(g);
  throw DomainError(os.str());
}

double require_finite(const GeneratingFunction& g, double value, double x, const char* what) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << what << ": not finite at " << x << " for " << describe(g);
    throw DomainError(os.str());
  }
  return value;
}

double phi_raw(const GeneratingFunction& g, double x) {
  switch (g.kind) {
    case GeneratorKind::Logistic:
      return xlogx(x) + xlogx(1.0 - x);
    case GeneratorKind::KL:
      if (g.epsilon == 0.0) return xlogx(x) - x;
      return x * std::log(x + g.epsilon) - x;
    case GeneratorKind::Beta:
      return std::pow(x, 1.0 + g.beta) / (g.beta * (1.0 + g.beta)) - x / g.beta;
    case GeneratorKind::ItakuraSaito:
      return -std::log(x);
    case GeneratorKind::Inverse:
      return 1.0 / x;
    case GeneratorKind::Quadratic:
      return 0.5 * (x * x - x);
    case GeneratorKind::Exponential:
      return std::exp(x);
    case GeneratorKind::DualLogistic:
      return softplus(x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double grad_raw(const GeneratingFunction& g, double x) {
  switch (g.kind) {
    case GeneratorKind::Logistic:
      return std::log(x) - std::log1p(-x);
    case GeneratorKind::KL:
      if (g.epsilon == 0.0) return std::log(x);
      return std::log(x + g.epsilon) + x / (x + g.epsilon) - 1.0;
    case GeneratorKind::Beta:
      return (std::pow(x, g.beta) - 1.0) / g.beta;
    case GeneratorKind::ItakuraSaito:
      return -1.0 / x;
    case GeneratorKind::Inverse:
      return -1.0 / (x * x);
    case GeneratorKind::Quadratic:
      return x - 0.5;
    case GeneratorKind::Exponential:
      return std::exp(x);
    case GeneratorKind::DualLogistic:
      return sigmoid(x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double hess_raw(const GeneratingFunction& g, double x) {
  switch (g.kind) {
    case GeneratorKind::Logistic:
      return 1.0 / (x * (1.0 - x));
    case GeneratorKind::KL: {
      const double s = x + g.epsilon;
      return (x + 2.0 * g.epsilon) / (s * s);
    }
    case GeneratorKind::Beta:
      return std::pow(x, g.beta - 1.0);
    case GeneratorKind::ItakuraSaito:
      return 1.0 / (x * x);
    case GeneratorKind::Inverse:
      return 2.0 / (x * x * x);
    case GeneratorKind::Quadratic:
      return 1.0;
    case GeneratorKind::Exponential:
      return std::exp(x);
    case GeneratorKind::DualLogistic: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double parse_number(std::string_view text, std::string_view key) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("bad numeric parameter in divergence key '" + std::string(key) + "'");
  return value;
}

}  // namespace

bool Interval::contains(double x) const {
  const bool above = lo_closed ? x >= lo : x > lo;
  const bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

GeneratingFunction GeneratingFunction::beta_div(double b) {
  if (!(b > 0.0)) throw ConfigError("beta divergence requires beta > 0");
  GeneratingFunction g{GeneratorKind::Beta};
  g.beta = b;
  return g;
}

GeneratingFunction parse_generating_function(std::string_view key) {
  if (key == "logistic") return GeneratingFunction::logistic();
  if (key == "kl") return GeneratingFunction::kl(kDefaultKlEpsilon);
  if (key.starts_with("kl:")) {
    const double eps = parse_number(key.substr(3), key);
    if (!(eps >= 0.0)) throw ConfigError("kl epsilon must be >= 0");
    return GeneratingFunction::kl(eps);
  }
  if (key.starts_with("beta:")) return GeneratingFunction::beta_div(parse_number(key.substr(5), key));
  if (key == "itakura-saito") return GeneratingFunction::itakura_saito();
  if (key == "inverse") return GeneratingFunction::inverse();
  if (key == "quadratic") return GeneratingFunction::quadratic();
  if (key == "exponential") return GeneratingFunction::exponential();
  if (key == "dual-logistic") return GeneratingFunction::dual_logistic();
  throw ConfigError("unknown divergence '" + std::string(key) + "'");
}

std::string to_key(const GeneratingFunction& g) {
  std::ostringstream os;
  os.precision(17);
  switch (g.kind) {
    case GeneratorKind::Logistic: return "logistic";
    case GeneratorKind::KL: os << "kl:" << g.epsilon; return os.str();
    case GeneratorKind::Beta: os << "beta:" << g.beta; return os.str();
    case GeneratorKind::ItakuraSaito: return "itakura-saito";
    case GeneratorKind::Inverse: return "inverse";
    case GeneratorKind::Quadratic: return "quadratic";
    case GeneratorKind::Exponential: return "exponential";
    case GeneratorKind::DualLogistic: return "dual-logistic";
  }
  return "?";
}

Interval domain(const GeneratingFunction& g) {
  switch (g.kind) {
    case GeneratorKind::Logistic: return {0.0, 1.0, true, true};
    case GeneratorKind::KL:
    case GeneratorKind::Beta: return {0.0, kInf, true, false};
    case GeneratorKind::ItakuraSaito:
    case GeneratorKind::Inverse: return {0.0, kInf, false, false};
    case GeneratorKind::Quadratic:
    case GeneratorKind::Exponential:
    case GeneratorKind::DualLogistic: return {-kInf, kInf, false, false};
  }
  return {0.0, 0.0, false, false};
}

bool in_domain(const GeneratingFunction& g, double x) { return domain(g).contains(x); }

double phi(const GeneratingFunction& g, double x) {
  x = admit(g, x, "phi");
  return require_finite(g, phi_raw(g, x), x, "phi");
}

double phi_grad(const GeneratingFunction& g, double x) {
  x = admit(g, x, "phi_grad");
  return require_finite(g, grad_raw(g, x), x, "phi_grad");
}

double phi_hess(const GeneratingFunction& g, double x) {
  x = admit(g, x, "phi_hess");
  return require_finite(g, hess_raw(g, x), x, "phi_hess");
}

double d_phi(const GeneratingFunction& g, double a, double b) {
  a = admit(g, a, "d_phi");
  b = admit(g, b, "d_phi");
  // b must sit where phi' exists.
  require_finite(g, grad_raw(g, b), b, "d_phi");
  if (a == b) return 0.0;
  double d = 0.0;
  switch (g.kind) {
    case GeneratorKind::Logistic:
      d = xlog_ratio(a, b) + xlog_ratio(1.0 - a, 1.0 - b);
      break;
    case GeneratorKind::KL:
      if (g.epsilon == 0.0) {
        d = xlog_ratio(a, b) - (a - b);
      } else {
        d = phi_raw(g, a) - phi_raw(g, b) - grad_raw(g, b) * (a - b);
      }
      break;
    case GeneratorKind::Beta: {
      const double bt = g.beta;
      d = std::pow(a, 1.0 + bt) / (bt * (1.0 + bt)) - a * std::pow(b, bt) / bt + std::pow(b, 1.0 + bt) / (1.0 + bt);
      break;
    }
    case GeneratorKind::ItakuraSaito: {
      const double r = a / b;
      d = r - std::log(r) - 1.0;
      break;
    }
    case GeneratorKind::Inverse: {
      const double diff = a - b;
      d = diff * diff / (a * b * b);
      break;
    }
    case GeneratorKind::Quadratic: {
      const double diff = a - b;
      d = 0.5 * diff * diff;
      break;
    }
    case GeneratorKind::Exponential:
      d = std::exp(a) - (a - b + 1.0) * std::exp(b);
      break;
    case GeneratorKind::DualLogistic:
      d = softplus(a) - softplus(b) - (a - b) * sigmoid(b);
      break;
  }
  require_finite(g, d, a, "d_phi");
  // d_phi >= 0 exactly; negative values here are cancellation noise.
  return std::max(d, 0.0);
}

double big_D(const GeneratingFunction& g, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch("big_D: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (a.empty()) throw LengthMismatch("big_D: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += d_phi(g, a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

ExpFamilyCoeffs exp_family_coeffs(const GeneratingFunction& g, double mu) {
  const double z1 = phi_grad(g, mu);
  return {z1, phi(g, mu) - mu * z1};
}

}  // namespace bhlr
