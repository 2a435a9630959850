#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "entryexit/errors.hpp"
#include "entryexit/system.hpp"

namespace entryexit {

double Matrix2::max_abs() const noexcept {
  return std::max({std::abs(f1), std::abs(f2), std::abs(g1), std::abs(g2)});
}

namespace {

constexpr Interval kBuiltinDomain{-4.0, 4.0};

double ipow(double base, int n) noexcept {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= base;
  return r;
}

void reject_unknown_params(const std::map<std::string, double>& params, const std::set<std::string>& allowed,
                           std::string_view system) {
  for (const auto& [key, value] : params) {
    if (!allowed.count(key)) {
      throw PreconditionError("system '" + std::string(system) + "' has no parameter '" + key + "'");
    }
  }
}

}  // namespace

Builtin builtin_from_name(std::string_view name) {
  if (name == "one_way_coupled") return Builtin::one_way_coupled;
  if (name == "eps_coupled") return Builtin::eps_coupled;
  if (name == "nonlinear") return Builtin::nonlinear;
  throw PreconditionError("unknown builtin system '" + std::string(name) +
                          "' (expected one_way_coupled, eps_coupled or nonlinear)");
}

std::string_view to_string(Builtin b) noexcept {
  switch (b) {
    case Builtin::one_way_coupled: return "one_way_coupled";
    case Builtin::eps_coupled: return "eps_coupled";
    case Builtin::nonlinear: return "nonlinear";
  }
  return "?";
}

FastSlowSystem make_builtin(Builtin name, const std::map<std::string, double>& params) {
  FastSlowSystem sys;
  sys.name = std::string(to_string(name));
  sys.domain = kBuiltinDomain;
  switch (name) {
    case Builtin::one_way_coupled:
      reject_unknown_params(params, {}, sys.name);
      sys.rhs_z1 = [](double x, double z1, double, double) { return x * z1; };
      sys.rhs_z2 = [](double x, double z1, double z2, double) { return x * z1 - z2; };
      sys.jac_f1 = [](double x, double) { return x; };
      sys.jac_f2 = [](double, double) { return 0.0; };
      sys.jac_g1 = [](double x, double) { return x; };
      sys.jac_g2 = [](double, double) { return -1.0; };
      break;
    case Builtin::eps_coupled:
      reject_unknown_params(params, {}, sys.name);
      sys.rhs_z1 = [](double x, double z1, double z2, double eps) { return x * z1 - eps * z2; };
      sys.rhs_z2 = [](double x, double z1, double z2, double) { return x * z1 - z2; };
      sys.jac_f1 = [](double x, double) { return x; };
      sys.jac_f2 = [](double, double eps) { return -eps; };
      sys.jac_g1 = [](double x, double) { return x; };
      sys.jac_g2 = [](double, double) { return -1.0; };
      break;
    case Builtin::nonlinear: {
      reject_unknown_params(params, {"a"}, sys.name);
      const auto it = params.find("a");
      const double a = it == params.end() ? 4.0 : it->second;
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw PreconditionError("nonlinear system requires a > 0");
      }
      sys.rhs_z1 = [a](double x, double z1, double z2, double eps) { return x * (z1 - z1 * z1 / a) + eps * z2; };
      sys.rhs_z2 = [](double, double z1, double z2, double) { return z1 * z1 - z2; };
      sys.jac_f1 = [](double x, double) { return x; };
      sys.jac_f2 = [](double, double eps) { return eps; };
      sys.jac_g1 = [](double, double) { return 0.0; };
      sys.jac_g2 = [](double, double) { return -1.0; };
      break;
    }
  }
  return sys;
}

FastSlowSystem make_builtin(std::string_view name, const std::map<std::string, double>& params) {
  return make_builtin(builtin_from_name(name), params);
}

InvarianceResidual manifold_invariance_residual(const FastSlowSystem& sys, double eps_max, int nx, int neps) {
  InvarianceResidual worst;
  for (int i = 0; i < nx; ++i) {
    const double x = sys.domain.lo + sys.domain.span() * i / (nx - 1);
    for (int k = 0; k < neps; ++k) {
      const double eps = neps == 1 ? 0.0 : eps_max * k / (neps - 1);
      const double r = std::max(std::abs(sys.rhs_z1(x, 0.0, 0.0, eps)), std::abs(sys.rhs_z2(x, 0.0, 0.0, eps)));
      if (r > worst.max_residual || std::isnan(r)) worst = {r, x, eps};
    }
  }
  return worst;
}

JacobianMismatch jacobian_consistency(const FastSlowSystem& sys, double eps_max, int nx, int neps) {
  constexpr double h = 1e-5;
  JacobianMismatch worst;
  auto check = [&](double supplied, double fd, double x, double eps, const char* entry) {
    const double e = std::abs(supplied - fd) / (1.0 + std::abs(supplied));
    if (e > worst.max_error || std::isnan(e)) worst = {e, x, eps, entry};
  };
  for (int i = 0; i < nx; ++i) {
    const double x = sys.domain.lo + sys.domain.span() * i / (nx - 1);
    for (int k = 0; k < neps; ++k) {
      const double eps = neps == 1 ? 0.0 : eps_max * k / (neps - 1);
      const Matrix2 a = sys.jacobian(x, eps);
      check(a.f1, (sys.rhs_z1(x, h, 0, eps) - sys.rhs_z1(x, -h, 0, eps)) / (2 * h), x, eps, "f1");
      check(a.f2, (sys.rhs_z1(x, 0, h, eps) - sys.rhs_z1(x, 0, -h, eps)) / (2 * h), x, eps, "f2");
      check(a.g1, (sys.rhs_z2(x, h, 0, eps) - sys.rhs_z2(x, -h, 0, eps)) / (2 * h), x, eps, "g1");
      check(a.g2, (sys.rhs_z2(x, 0, h, eps) - sys.rhs_z2(x, 0, -h, eps)) / (2 * h), x, eps, "g2");
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Configuration files

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line; }

template <class T>
T read_scalar(const YAML::Node& node, const std::string& field) {
  if (!node || !node.IsScalar()) {
    throw ConfigError("field '" + field + "' must be a scalar", node ? line_of(node) : -1);
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("field '" + field + "' has invalid value '" + node.Scalar() + "'", line_of(node));
  }
}

int read_exponent(const YAML::Node& term, const char* key, const std::string& where) {
  const YAML::Node v = term[key];
  if (!v) throw ConfigError(where + ": missing exponent '" + key + "'", line_of(term));
  const int e = read_scalar<int>(v, where + "." + key);
  if (e < 0) throw ConfigError(where + ": exponent '" + std::string(key) + "' must be nonnegative", line_of(v));
  return e;
}

double read_coefficient(const YAML::Node& term, const std::string& where) {
  const YAML::Node v = term["c"];
  if (!v) throw ConfigError(where + ": missing coefficient 'c'", line_of(term));
  const double c = read_scalar<double>(v, where + ".c");
  if (!std::isfinite(c)) throw ConfigError(where + ": coefficient must be finite", line_of(v));
  return c;
}

void reject_unknown_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'", line_of(kv.first));
  }
}

const YAML::Node& require_sequence(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + " must be a list of terms", line_of(node));
  return node;
}

std::vector<CoefficientTerm> read_coefficient_terms(const YAML::Node& node, const std::string& where) {
  std::vector<CoefficientTerm> out;
  for (const auto& term : require_sequence(node, where)) {
    if (!term.IsMap()) throw ConfigError(where + ": each term must be a map {i, j, c}", line_of(term));
    reject_unknown_keys(term, {"i", "j", "c"}, where);
    out.push_back({read_exponent(term, "i", where), read_exponent(term, "j", where), read_coefficient(term, where)});
  }
  return out;
}

std::vector<MonomialTerm> read_monomials(const YAML::Node& node, const std::string& where) {
  std::vector<MonomialTerm> out;
  for (const auto& term : require_sequence(node, where)) {
    if (!term.IsMap()) throw ConfigError(where + ": each term must be a map {ix, i1, i2, j, c}", line_of(term));
    reject_unknown_keys(term, {"ix", "i1", "i2", "j", "c"}, where);
    MonomialTerm m{read_exponent(term, "ix", where), read_exponent(term, "i1", where),
                   read_exponent(term, "i2", where), read_exponent(term, "j", where), read_coefficient(term, where)};
    if (m.i1 + m.i2 < 1) {
      throw ConfigError(where + ": term c*x^" + std::to_string(m.ix) + "*eps^" + std::to_string(m.j) +
                            " has z-degree 0, so Z(x,0,0,eps) != 0 and the manifold z=0 is not invariant",
                        line_of(term));
    }
    out.push_back(m);
  }
  return out;
}

double eval_coefficient(const std::vector<CoefficientTerm>& terms, double x, double eps) {
  double s = 0.0;
  for (const auto& t : terms) s += t.c * ipow(x, t.i) * ipow(eps, t.j);
  return s;
}

double eval_monomials(const std::vector<MonomialTerm>& terms, double x, double z1, double z2, double eps) {
  double s = 0.0;
  for (const auto& t : terms) s += t.c * ipow(x, t.ix) * ipow(z1, t.i1) * ipow(z2, t.i2) * ipow(eps, t.j);
  return s;
}

}  // namespace

PolynomialSystemSpec parse_system_spec(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("parse error: " + e.msg, e.mark.line);
  }
  if (!root.IsMap()) throw ConfigError("system description must be a map", root ? line_of(root) : -1);
  reject_unknown_keys(root, {"name", "domain", "jacobian", "nonlinear"}, "top level");

  PolynomialSystemSpec spec;
  if (!root["name"]) throw ConfigError("missing field 'name'");
  spec.name = read_scalar<std::string>(root["name"], "name");

  const YAML::Node domain = root["domain"];
  if (!domain) throw ConfigError("missing field 'domain'");
  if (!domain.IsSequence() || domain.size() != 2) {
    throw ConfigError("field 'domain' must be [lo, hi]", line_of(domain));
  }
  spec.domain = {read_scalar<double>(domain[0], "domain[0]"), read_scalar<double>(domain[1], "domain[1]")};
  if (!(spec.domain.lo < spec.domain.hi)) throw ConfigError("field 'domain' needs lo < hi", line_of(domain));

  const YAML::Node jac = root["jacobian"];
  if (!jac) throw ConfigError("missing field 'jacobian'");
  if (!jac.IsMap()) throw ConfigError("field 'jacobian' must be a map", line_of(jac));
  reject_unknown_keys(jac, {"f1", "f2", "g1", "g2"}, "jacobian");
  if (jac["f1"]) spec.f1 = read_coefficient_terms(jac["f1"], "jacobian.f1");
  if (jac["f2"]) spec.f2 = read_coefficient_terms(jac["f2"], "jacobian.f2");
  if (jac["g1"]) spec.g1 = read_coefficient_terms(jac["g1"], "jacobian.g1");
  if (jac["g2"]) spec.g2 = read_coefficient_terms(jac["g2"], "jacobian.g2");

  if (const YAML::Node nl = root["nonlinear"]) {
    if (!nl.IsMap()) throw ConfigError("field 'nonlinear' must be a map", line_of(nl));
    reject_unknown_keys(nl, {"z1", "z2"}, "nonlinear");
    if (nl["z1"]) spec.nonlinear_z1 = read_monomials(nl["z1"], "nonlinear.z1");
    if (nl["z2"]) spec.nonlinear_z2 = read_monomials(nl["z2"], "nonlinear.z2");
  }
  return spec;
}

FastSlowSystem build_system(const PolynomialSystemSpec& spec) {
  for (const auto* terms : {&spec.nonlinear_z1, &spec.nonlinear_z2}) {
    for (const auto& t : *terms) {
      if (t.i1 + t.i2 < 1) {
        throw ConfigError("nonlinear term of z-degree 0: manifold z=0 is not invariant");
      }
    }
  }
  FastSlowSystem sys;
  sys.name = spec.name;
  sys.domain = spec.domain;
  sys.jac_f1 = [t = spec.f1](double x, double eps) { return eval_coefficient(t, x, eps); };
  sys.jac_f2 = [t = spec.f2](double x, double eps) { return eval_coefficient(t, x, eps); };
  sys.jac_g1 = [t = spec.g1](double x, double eps) { return eval_coefficient(t, x, eps); };
  sys.jac_g2 = [t = spec.g2](double x, double eps) { return eval_coefficient(t, x, eps); };
  sys.rhs_z1 = [f1 = spec.f1, f2 = spec.f2, nl = spec.nonlinear_z1](double x, double z1, double z2, double eps) {
    return eval_coefficient(f1, x, eps) * z1 + eval_coefficient(f2, x, eps) * z2 + eval_monomials(nl, x, z1, z2, eps);
  };
  sys.rhs_z2 = [g1 = spec.g1, g2 = spec.g2, nl = spec.nonlinear_z2](double x, double z1, double z2, double eps) {
    return eval_coefficient(g1, x, eps) * z1 + eval_coefficient(g2, x, eps) * z2 + eval_monomials(nl, x, z1, z2, eps);
  };

  const InvarianceResidual inv = manifold_invariance_residual(sys);
  if (inv.max_residual != 0.0) {
    std::ostringstream msg;
    msg << "manifold z=0 is not invariant: |Z(x,0,0,eps)| = " << inv.max_residual << " at x=" << inv.x
        << ", eps=" << inv.eps;
    throw ConfigError(msg.str());
  }
  const JacobianMismatch jm = jacobian_consistency(sys);
  if (!(jm.max_error <= 1e-6)) {
    std::ostringstream msg;
    msg << "declared jacobian entry " << jm.entry << " disagrees with the vector field (relative error "
        << jm.max_error << " at x=" << jm.x << ", eps=" << jm.eps
        << "); nonlinear terms of z-degree 1 must be declared in 'jacobian'";
    throw ConfigError(msg.str());
  }
  return sys;
}

FastSlowSystem load_system(std::string_view spec_text) { return build_system(parse_system_spec(spec_text)); }

FastSlowSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_system(buf.str());
}

}  // namespace entryexit
