#include "lfun/forms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lfun {

int n_terms(double y, double acc) {
  if (!(y > 0.0)) throw input_error("n_terms: y must be positive");
  acc = std::min(std::max(acc, 1e-300), 0.5);
  double n = (std::log(1.0 / acc) + 10.0) / (kTwoPi * y);
  return std::max(1, static_cast<int>(std::ceil(n)));
}

int n_terms_jet(double y, double acc, int order) {
  if (order <= 0) return n_terms(y, acc);
  acc = std::min(std::max(acc, 1e-300), 0.5);
  // order-th Taylor coefficients pick up a factor ~ n^order per q-term, so
  // solve  2 pi y n  >=  log(1/acc) + 10 + order * log n  by iteration
  double base = std::log(1.0 / acc) + 10.0;
  double n = std::max(3.0, base / (kTwoPi * y));
  for (int it = 0; it < 6; ++it)
    n = std::max(3.0, (base + order * std::log(n)) / (kTwoPi * y));
  return std::max(1, static_cast<int>(std::ceil(n)));
}

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string &what) {
  throw input_error("form file: " + what);
}

void check_keys(const json &j, std::initializer_list<const char *> allowed,
                const char *where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) bad(std::string("unknown key \"") + it.key() + "\" in " + where);
  }
}

}  // namespace

Form parse_form_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception &e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");
  check_keys(j, {"kind", "weight", "level", "r", "fricke", "coefficients",
                 "deriv_bound_R"},
             "top level");

  Form f;
  if (!j.contains("kind") || !j["kind"].is_string()) bad("missing string \"kind\"");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "holomorphic") f.kind = FormKind::holomorphic;
  else if (kind == "maass") f.kind = FormKind::maass;
  else bad("kind must be \"holomorphic\" or \"maass\"");

  if (j.contains("level")) {
    if (!j["level"].is_number_integer()) bad("level must be an integer");
    f.level = j["level"].get<int>();
  }
  if (f.level != 1) bad("only level 1 is supported");

  if (f.kind == FormKind::holomorphic) {
    if (!j.contains("weight") || !j["weight"].is_number_integer())
      bad("holomorphic form needs integer \"weight\"");
    f.weight = j["weight"].get<int>();
    if (f.weight < 4 || f.weight % 2 != 0)
      bad("holomorphic weight must be even and >= 4");
    if (j.contains("r")) bad("holomorphic form must not carry \"r\"");
  } else {
    if (j.contains("weight")) {
      if (!j["weight"].is_number_integer() || j["weight"].get<int>() != 0)
        bad("maass form weight must be 0");
    }
    f.weight = 0;
    if (!j.contains("r") || !j["r"].is_number())
      bad("maass form needs numeric \"r\"");
    f.r = j["r"].get<double>();
    if (!std::isfinite(f.r)) bad("r must be finite");
  }

  if (j.contains("fricke")) {
    const json &fr = j["fricke"];
    if (!fr.is_object()) bad("\"fricke\" must be an object");
    check_keys(fr, {"C1", "C2_re", "C2_im"}, "fricke");
    if (!fr.contains("C1") || !fr["C1"].is_number()) bad("fricke needs numeric C1");
    f.fricke_c1 = fr["C1"].get<double>();
    if (!(f.fricke_c1 > 0.0)) bad("fricke C1 must be positive");
    double c2r = fr.contains("C2_re") ? fr["C2_re"].get<double>() : 1.0;
    double c2i = fr.contains("C2_im") ? fr["C2_im"].get<double>() : 0.0;
    f.fricke_c2 = cxd{c2r, c2i};
    if (norm2(f.fricke_c2) == 0.0) bad("fricke C2 must be nonzero");
  }

  if (!j.contains("coefficients") || !j["coefficients"].is_array())
    bad("missing array \"coefficients\"");
  const json &cs = j["coefficients"];
  if (cs.empty()) bad("coefficients array is empty");
  f.coeffs.reserve(cs.size());
  f.coeffs_exact = true;
  for (const auto &c : cs) {
    if (!c.is_number()) bad("coefficients must be numbers");
    if (!c.is_number_integer()) f.coeffs_exact = false;
    double v = c.get<double>();
    if (!std::isfinite(v)) bad("coefficients must be finite");
    f.coeffs.push_back(v);
  }

  if (j.contains("deriv_bound_R")) {
    if (!j["deriv_bound_R"].is_number()) bad("deriv_bound_R must be numeric");
    f.deriv_bound_r = j["deriv_bound_R"].get<double>();
    if (!(f.deriv_bound_r > 0.0)) bad("deriv_bound_R must be positive");
  }
  return f;
}

Form load_form(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open form file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_form_json(ss.str());
}

namespace {

std::string i128_to_string(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                            : static_cast<unsigned __int128>(v);
  char buf[48];
  int p = 48;
  while (u > 0) {
    buf[--p] = static_cast<char>('0' + static_cast<int>(u % 10));
    u /= 10;
  }
  std::string s(buf + p, buf + 48);
  return neg ? "-" + s : s;
}

std::vector<__int128> conv(const std::vector<__int128> &a,
                           const std::vector<__int128> &b, size_t n) {
  std::vector<__int128> r(n, 0);
  for (size_t i = 0; i < std::min(a.size(), n); ++i) {
    if (a[i] == 0) continue;
    __int128 ai = a[i];
    size_t top = std::min(b.size(), n - i);
    for (size_t j = 0; j < top; ++j) r[i + j] += ai * b[j];
  }
  return r;
}

}  // namespace

DeltaTable gen_delta(int n_max) {
  if (n_max < 1) throw input_error("gen_delta: n_max must be >= 1");
  size_t n = static_cast<size_t>(n_max);  // powers of q^0..q^{n-1} of P^24

  // P = prod (1 - q^m) by Euler's pentagonal series, exactly sparse
  std::vector<__int128> p1(n, 0);
  p1[0] = 1;
  for (long long jdx = 1;; ++jdx) {
    long long g1 = jdx * (3 * jdx - 1) / 2;
    long long g2 = jdx * (3 * jdx + 1) / 2;
    if (g1 >= static_cast<long long>(n) && g2 >= static_cast<long long>(n)) break;
    __int128 s = (jdx % 2 != 0) ? -1 : 1;
    if (g1 < static_cast<long long>(n)) p1[static_cast<size_t>(g1)] += s;
    if (g2 < static_cast<long long>(n)) p1[static_cast<size_t>(g2)] += s;
  }

  // P^24 = ((P^2)^2)^2 ^ ... : 2, 4, 8, 16, 24
  std::vector<__int128> p2 = conv(p1, p1, n);
  std::vector<__int128> p4 = conv(p2, p2, n);
  std::vector<__int128> p8 = conv(p4, p4, n);
  std::vector<__int128> p16 = conv(p8, p8, n);
  std::vector<__int128> p24 = conv(p16, p8, n);

  DeltaTable t;
  t.digits.reserve(n);
  t.value.reserve(n);
  for (size_t m = 0; m < n; ++m) {  // tau(m+1) = [q^m] P^24
    t.digits.push_back(i128_to_string(p24[m]));
    t.value.push_back(static_cast<double>(p24[m]));
  }
  return t;
}

void write_delta_form(const std::string &path, int n_max) {
  DeltaTable t = gen_delta(n_max);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write form file: " + path);
  out << "{\n"
      << "  \"kind\": \"holomorphic\",\n"
      << "  \"weight\": 12,\n"
      << "  \"level\": 1,\n"
      << "  \"fricke\": {\"C1\": 1.0, \"C2_re\": 1.0, \"C2_im\": 0.0},\n"
      << "  \"coefficients\": [\n";
  for (size_t i = 0; i < t.digits.size(); ++i) {
    if (i % 8 == 0) out << "    ";
    out << t.digits[i];
    if (i + 1 < t.digits.size()) out << (i % 8 == 7 ? ",\n" : ", ");
  }
  out << "\n  ]\n}\n";
  if (!out) throw input_error("write failed: " + path);
}

double estimate_R(const Form &f, int d) {
  if (f.deriv_bound_r > 0.0) return std::max(1.0, f.deriv_bound_r);
  if (d < 1) d = 1;
  // Kronecker sequence over a fundamental-domain box; deterministic
  const double a1 = 0.41421356237309515;   // frac(sqrt 2)
  const double a2 = 0.7320508075688772;    // frac(sqrt 3)
  const double a3 = 0.23606797749978969;   // frac(sqrt 5)
  double best = 1.0;
  for (int s = 1; s <= 100; ++s) {
    double x = std::fmod(s * a1, 1.0) - 0.5;
    double y = 0.9 + 1.8 * std::fmod(s * a2, 1.0);
    double th = kPi * (std::fmod(s * a3, 1.0) - 0.5);
    Mat2<double> m = mat_n(x) * mat_a(std::log(y)) * mat_k(th);
    Jet3<cxd> jet = lift_jet3(f, m, d, 1e-14);
    // Taylor-coefficient convention: |coef_beta| <= (R)^{|beta|} * scale, so
    // R = max |coef/scale|^{1/|beta|}; matches the quadrature's radius model.
    double scale = std::max(std::sqrt(norm2(jet.at(0, 0, 0))), 1e-30);
    for (int b1 = 0; b1 <= d; ++b1)
      for (int b2 = 0; b1 + b2 <= d; ++b2)
        for (int b3 = 0; b1 + b2 + b3 <= d; ++b3) {
          int tot = b1 + b2 + b3;
          if (tot == 0) continue;
          double mag = std::sqrt(norm2(jet.at(b1, b2, b3))) / scale;
          if (mag > 0.0) best = std::max(best, std::pow(mag, 1.0 / tot));
        }
  }
  return best;
}

}  // namespace lfun
