#include <doctest.h>

#include "helpers.hpp"
#include "ibcsim/bohm.hpp"
#include "ibcsim/errors.hpp"

using namespace ibc;
using testing::model3;
using testing::model4;

namespace {

// psi2 = a + i b y on every row, psi1 = -(hbar^2 / 2 m g) a: the boundary
// condition holds exactly and the one-sided derivative is exact.
SectoredWaveFunction linear_profile(const ModelParams& p, const LatticeSpec& spec, double a, double b) {
  SectoredWaveFunction psi(spec);
  for (int i = 0; i < spec.nx; ++i) {
    psi[psi.lower_index(i)] = -(p.hbar * p.hbar / (2.0 * p.mass * p.g)) * a;
    for (int j = 1; j <= spec.ny; ++j) psi[psi.upper_index(i, j)] = cplx(a, b * j * spec.eps);
  }
  return psi;
}

}  // namespace

TEST_CASE("real wavefunctions have zero velocity and zero rates") {
  std::mt19937_64 gen(30);
  const ModelParams p{1.0, 1.0, 0.8, std::nullopt};
  const HamiltonianOp h(p, model4(0.1, 10, 10));
  auto psi = testing::random_real_state(h.spec(), gen);
  for (auto& a : psi.amplitudes()) a = std::abs(a.real()) + 0.1;
  psi = normalize(psi);
  const BohmField f(h);
  const auto view = PsiView::of(psi);
  for (double x : {-0.3, 0.0, 0.17})
    for (double y : {0.0, 0.03, 0.5}) {
      const auto v = f.velocity(view, Configuration::plane(2, x, y));
      CHECK(v[0] == 0.0);
      CHECK(v[1] == 0.0);
    }
  CHECK(f.velocity(view, Configuration::line(1, 0.12))[0] == 0.0);
  for (int i = 0; i < 10; ++i) CHECK(f.jump_rate_model4(view, h.spec().x_of(i)) == 0.0);

  const HamiltonianOp h3(p, model3(0.1, 30));
  auto w = testing::random_real_state(h3.spec(), gen);
  for (auto& a : w.amplitudes()) a = std::abs(a.real()) + 0.1;
  w = normalize(w);
  const BohmField f3(h3);
  CHECK(f3.jump_rate_model3_total(PsiView::of(w)) == 0.0);
  CHECK(f3.emission_velocity_model3(PsiView::of(w)) == 0.0);
  CHECK(f3.velocity(PsiView::of(w), Configuration::line(1, 0.44))[0] == 0.0);
}

TEST_CASE("discrete plane wave velocity") {
  const double eps = 0.1, hbar = 1.3, mass = 0.7;
  const int nx = 40;
  const HamiltonianOp h({hbar, mass, 0.5, std::nullopt}, model4(eps, nx, 6));
  const double k = 2.0 * M_PI * 3 / (nx * eps);
  SectoredWaveFunction psi(h.spec());
  for (int i = 0; i < nx; ++i) psi[psi.lower_index(i)] = std::polar(1.0, k * h.spec().x_of(i));
  for (auto& a : psi.sector_amplitudes(2)) a = 1.0;
  psi = normalize(psi);
  const BohmField f(h);
  const double expected = hbar / (mass * eps) * std::sin(k * eps);
  for (int i : {0, 7, 39}) {
    const double v = f.velocity(PsiView::of(psi), Configuration::line(1, h.spec().x_of(i)))[0];
    CHECK(v == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("global phase invariance") {
  std::mt19937_64 gen(31);
  const HamiltonianOp h({1.0, 1.0, 0.8, std::nullopt}, model4(0.1, 10, 10));
  const auto psi = normalize(testing::random_state(h.spec(), gen));
  const auto rot = cplx(std::polar(1.0, 0.77)) * psi;
  const BohmField f(h);
  for (const auto& q : {Configuration::plane(2, 0.13, 0.21), Configuration::plane(2, -0.4, 0.02),
                        Configuration::line(1, 0.31)}) {
    const auto a = f.velocity(PsiView::of(psi), q);
    const auto b = f.velocity(PsiView::of(rot), q);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
  }
  for (int i = 0; i < 10; ++i)
    CHECK(f.jump_rate_model4(PsiView::of(psi), h.spec().x_of(i)) ==
          doctest::Approx(f.jump_rate_model4(PsiView::of(rot), h.spec().x_of(i))).epsilon(1e-12));
}

TEST_CASE("Model 4 jump rate of the linear boundary profile") {
  for (const ModelParams& p : {ModelParams{1.0, 1.0, 0.6, std::nullopt}, ModelParams{0.8, 1.7, -1.1, std::nullopt}}) {
    const double a = 0.9, b = 0.4;
    const HamiltonianOp h(p, model4(0.05, 8, 8));
    const auto psi = linear_profile(p, h.spec(), a, b);
    const BohmField f(h, 0.0);
    const double expected = 4.0 * p.mass * p.g * p.g / std::pow(p.hbar, 3) * (b / a);
    for (int i = 0; i < 8; ++i) {
      CHECK(f.jump_rate_model4(PsiView::of(psi), h.spec().x_of(i)) == doctest::Approx(expected).epsilon(1e-12));
      // the conjugate profile flows into the boundary: no creation
      CHECK(f.jump_rate_model4(PsiView::of(conjugate(psi)), h.spec().x_of(i)) == 0.0);
    }
  }
}

TEST_CASE("g = 0 forces a vanishing boundary value and zero rate") {
  std::mt19937_64 gen(32);
  const HamiltonianOp h({1.0, 1.0, 0.0, std::nullopt}, model4(0.1, 8, 8));
  const auto psi = normalize(testing::random_state(h.spec(), gen));
  const BohmField f(h);
  for (int i = 0; i < 8; ++i) CHECK(f.jump_rate_model4(PsiView::of(psi), h.spec().x_of(i)) == 0.0);
}

TEST_CASE("node proximity is reported, not clipped") {
  const HamiltonianOp h({1.0, 1.0, 0.5, std::nullopt}, model4(0.1, 8, 8));
  SectoredWaveFunction psi(h.spec());
  for (int j = 1; j <= 8; ++j)
    for (int i = 0; i < 8; ++i) psi[psi.upper_index(i, j)] = {1.0, 0.1 * j};
  psi = normalize(psi);
  const BohmField f(h);
  CHECK_THROWS_AS(f.jump_rate_model4(PsiView::of(psi), 0.0), NodeProximityError);
  CHECK_THROWS_AS(f.velocity(PsiView::of(psi), Configuration::line(1, 0.0)), NodeProximityError);
}

TEST_CASE("creation rate equals the boundary-current form") {
  std::mt19937_64 gen(33);
  std::uniform_real_distribution<double> gx(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p{gx(gen), gx(gen), gx(gen) - 1.1, std::nullopt};
    const HamiltonianOp h(p, model4(0.1, 8, 6));
    const auto psi = normalize(testing::random_state(h.spec(), gen));
    const BohmField f(h, 0.0);
    for (int i = 0; i < 8; ++i) {
      const double x = h.spec().x_of(i);
      const double rate = f.jump_rate_model4(PsiView::of(psi), x);
      const double j = f.boundary_current_y(PsiView::of(psi), x);
      const double rho1 = std::norm(psi.lower(i));
      CHECK(rate == doctest::Approx(std::max(0.0, j) / rho1).epsilon(1e-12));
      CHECK(rate >= 0.0);
    }
  }
}

TEST_CASE("Model 3 rate and emission velocity, hand evaluation") {
  const double eps = 0.05, s = 0.8;
  for (double g : {-1.2, 1.2}) {
    const ModelParams p{1.0, 1.0, g, std::nullopt};
    const HamiltonianOp h(p, model3(eps, 40));
    const double gt = g / std::sqrt(4.0 * M_PI);
    const double w0 = -2.0 * gt;
    SectoredWaveFunction psi(h.spec());
    psi[0] = 1.0;
    for (int k = 1; k <= 40; ++k) psi[psi.radial_index(k)] = cplx(w0, s * k * eps);
    CHECK(h.eliminated_boundary_value(psi, 0).real() == doctest::Approx(w0));
    const BohmField f(h, 0.0);
    const auto view = PsiView::of(psi);
    const double rate = f.jump_rate_model3_total(view);
    CHECK(rate == doctest::Approx(std::max(0.0, w0 * s)).epsilon(1e-12));
    CHECK(f.emission_velocity_model3(view) == doctest::Approx(s / w0).epsilon(1e-12));
    CHECK(f.emission_velocity_model3(PsiView::of(conjugate(psi))) == doctest::Approx(-s / w0).epsilon(1e-12));
    const double j0 = f.origin_current_model3(view);
    CHECK(rate == doctest::Approx(std::max(0.0, j0) / std::norm(psi.empty())).epsilon(1e-12));
    const auto c = f.origin_coefficients(view);
    CHECK(std::abs(c[0] - cplx(w0 / std::sqrt(4.0 * M_PI))) < 1e-14);
    CHECK(std::abs(c[1] - cplx(0.0, s / std::sqrt(4.0 * M_PI))) < 1e-12);
  }
}

TEST_CASE("absorption speed at the origin mirrors the conjugate emission velocity") {
  std::mt19937_64 gen(34);
  const HamiltonianOp h({1.0, 1.0, 0.9, std::nullopt}, model3(0.05, 40));
  for (int trial = 0; trial < 10; ++trial) {
    auto psi = testing::random_state(h.spec(), gen);
    psi[0] = {1.0 + trial * 0.1, 0.3};
    psi = normalize(psi);
    const BohmField f(h, 0.0);
    const double v = f.velocity(PsiView::of(psi), Configuration::line(1, 0.0))[0];
    CHECK(v == doctest::Approx(-f.emission_velocity_model3(PsiView::of(conjugate(psi)))).epsilon(1e-10));
  }
}

TEST_CASE("emission velocity is undefined without an empty-configuration amplitude") {
  const HamiltonianOp h({1.0, 1.0, 0.9, std::nullopt}, model3(0.05, 20));
  SectoredWaveFunction psi(h.spec());
  for (int k = 1; k <= 20; ++k) psi[psi.radial_index(k)] = 1.0;
  psi = normalize(psi);
  const BohmField f(h);
  CHECK_THROWS_AS(f.emission_velocity_model3(PsiView::of(psi)), UndefinedVelocityError);
  CHECK_THROWS_AS(f.jump_rate_model3_total(PsiView::of(psi)), NodeProximityError);
}

TEST_CASE("time interpolation of psi") {
  std::mt19937_64 gen(35);
  const HamiltonianOp h({1.0, 1.0, 0.9, std::nullopt}, model4(0.1, 8, 8));
  const auto a = normalize(testing::random_state(h.spec(), gen));
  const auto b = normalize(testing::random_state(h.spec(), gen));
  const auto mid = 0.75 * a + 0.25 * b;
  const BohmField f(h, 0.0);
  const auto q = Configuration::plane(2, 0.05, 0.33);
  const auto v1 = f.velocity(PsiView::between(a, b, 0.25), q);
  const auto v2 = f.velocity(PsiView::of(mid), q);
  CHECK(v1[0] == doctest::Approx(v2[0]).epsilon(1e-12));
  CHECK(v1[1] == doctest::Approx(v2[1]).epsilon(1e-12));
}
