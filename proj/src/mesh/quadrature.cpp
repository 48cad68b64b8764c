#include "ksfem/mesh/quadrature.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace ksfem::mesh {
namespace {

using Bary = std::array<double, 4>;

void add_orbit(Quadrature &q, Bary base, double w) {
  std::sort(base.begin(), base.end());
  std::set<Bary> seen;
  do {
    if (seen.insert(base).second) {
      q.points.push_back(base);
      q.weights.push_back(w);
    }
  } while (std::next_permutation(base.begin(), base.end()));
}

void add_orbit4(Quadrature &q, double a, double w) { add_orbit(q, {a, a, a, 1.0 - 3.0 * a}, w); }

Quadrature degree1() {
  Quadrature q;
  q.points.push_back({0.25, 0.25, 0.25, 0.25});
  q.weights.push_back(1.0);
  q.order = 1;
  return q;
}

Quadrature degree2() {
  Quadrature q;
  add_orbit4(q, 0.13819660112501051518, 0.25);
  q.order = 2;
  return q;
}

// 14-point rule, degree 5 (Walkington). Constants refined to 20 digits.
Quadrature degree5() {
  Quadrature q;
  add_orbit4(q, 0.092735250310891226402, 0.073493043116361949544);
  add_orbit4(q, 0.3108859192633006098, 0.1126879257180158508);
  const double c = 0.045503704125649649492;
  add_orbit(q, {c, c, 0.5 - c, 0.5 - c}, 0.042546020777081466438);
  q.order = 5;
  return q;
}

// 24-point rule, degree 6 (Keast).
Quadrature degree6() {
  Quadrature q;
  add_orbit4(q, 0.21460287125915202929, 0.0399227502581674921);
  add_orbit4(q, 0.040673958534611353116, 0.010077211055320642948);
  add_orbit4(q, 0.32233789014227551034, 0.055357181543654722095);
  const double a = 0.063661001875017525299;
  const double b = 0.26967233145831580803;
  add_orbit(q, {a, a, b, 1.0 - 2.0 * a - b}, 0.048214285714285714286);
  q.order = 6;
  return q;
}

} // namespace

Quadrature quadrature_rule(int order) {
  switch (order) {
  case 1:
    return degree1();
  case 2:
    return degree2();
  case 3:
  case 4:
  case 5:
    return degree5();
  case 6:
    return degree6();
  default:
    throw std::invalid_argument("quadrature_rule: unsupported order " + std::to_string(order));
  }
}

} // namespace ksfem::mesh
