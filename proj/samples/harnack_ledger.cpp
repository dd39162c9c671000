// Constructive growth constant lambda for the compact of radius 1/2 in the
// unit ball, for d = 3 and d = 2, with the full constant ledger.
#include <supermoment/supermoment.hpp>

#include <cstdio>

using namespace supermoment;

template <int Dim>
void show() {
  BallDomain<Dim> dom;
  auto theta = threeGEstimate(dom, 20000, 99);
  ConstantLedger L = constructiveLambda(dom, 0.5, theta.thetaHat);
  std::printf("d = %d\n", Dim);
  for (const auto& e : L.entries()) std::printf("  %-9s %14.6g  %s\n", e.name.c_str(), e.value, provenanceName(e.provenance));
  bool ok = true;
  for (const auto& c : replayLedger(L)) ok = ok && c.passed;
  std::printf("  replay %s, binding n = %d\n", ok ? "consistent" : "INCONSISTENT", L.bindingN);
}

int main() {
  show<3>();
  show<2>();
}
