#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "ibcsim/errors.hpp"
#include "ibcsim/snapshot_io.hpp"
#include "ibcsim/state.hpp"

using namespace ibc;
using testing::model3;
using testing::model4;

TEST_CASE("inner product of zero vectors is zero") {
  SectoredWaveFunction a(model4(0.1, 8, 8));
  CHECK(inner_product(a, a) == cplx{});
}

TEST_CASE("single sector-1 site carries weight eps") {
  SectoredWaveFunction a(model4(0.5, 8, 8));
  a[a.lower_index(3)] = 1.0;
  CHECK(std::abs(inner_product(a, a) - cplx{0.5}) < 1e-15);
}

TEST_CASE("inner product matches a flat-loop sum with hand-written weights") {
  std::mt19937_64 gen(1);
  const auto spec = model4(0.3, 8, 8);
  const auto a = testing::random_state(spec, gen);
  const auto b = testing::random_state(spec, gen);
  cplx oracle{};
  for (int i = 0; i < 8; ++i) oracle += 0.3 * std::conj(a.lower(i)) * b.lower(i);
  for (int j = 1; j <= 8; ++j)
    for (int i = 0; i < 8; ++i) oracle += 0.09 * std::conj(a.upper(i, j)) * b.upper(i, j);
  CHECK(std::abs(inner_product(a, b) - oracle) <= 1e-14 * std::abs(oracle));
  CHECK(std::abs(inner_product(a, b) - std::conj(inner_product(b, a))) < 1e-13);
  const cplx self = inner_product(a, a);
  CHECK(self.imag() == doctest::Approx(0.0));
  CHECK(self.real() > 0.0);
}

TEST_CASE("mismatched grids are rejected") {
  SectoredWaveFunction a(model4(0.1, 8, 8)), b(model4(0.1, 8, 6));
  CHECK_THROWS_AS(inner_product(a, b), ShapeError);
  CHECK_THROWS_AS(a += b, ShapeError);
}

TEST_CASE("sector probabilities") {
  const auto spec = model4(0.2, 6, 5);
  SectoredWaveFunction psi(spec);
  for (int i = 0; i < 6; ++i) psi[psi.lower_index(i)] = {1.0, 0.5};
  psi = normalize(psi);
  CHECK(sector_probability(psi, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sector_probability(psi, 2) == 0.0);
  CHECK_THROWS_AS(sector_probability(psi, 3), DomainError);

  SectoredWaveFunction up(spec);
  up[up.upper_index(2, 3)] = 1.0;
  auto mix = normalize(normalize(psi) + normalize(up));
  CHECK(sector_probability(mix, 1) == doctest::Approx(0.5));
  CHECK(sector_probability(mix, 2) == doctest::Approx(0.5));

  std::mt19937_64 gen(2);
  const auto r = normalize(testing::random_state(spec, gen));
  CHECK(std::abs(sector_probability(r, 1) - (1.0 - sector_probability(r, 2))) < 1e-12);
  CHECK_THROWS_AS(sector_probability(2.0 * r, 1), DomainError);
}

TEST_CASE("normalize") {
  const auto spec = model4(0.25, 4, 4);
  SectoredWaveFunction psi(spec);
  for (auto& a : psi.amplitudes()) a = 1.0;
  psi *= 2.0 / norm(psi);
  const auto n = normalize(psi);
  for (std::size_t k = 0; k < psi.size(); ++k) CHECK(std::abs(n[k] - psi[k] / 2.0) < 1e-15);
  const auto nn = normalize(n);
  for (std::size_t k = 0; k < psi.size(); ++k) CHECK(std::abs(nn[k] - n[k]) < 1e-15);

  std::mt19937_64 gen(3);
  CHECK(norm(normalize(testing::random_state(model4(0.1, 16, 12), gen))) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(normalize(SectoredWaveFunction(spec)), DegenerateInputError);
}

TEST_CASE("Model 3 norm is |psi0|^2 plus eps sum |w|^2") {
  std::mt19937_64 gen(4);
  const auto spec = model3(0.05, 40);
  const auto psi = testing::random_state(spec, gen);
  double oracle = std::norm(psi.empty());
  for (int k = 1; k <= 40; ++k) oracle += 0.05 * std::norm(psi.radial(k));
  CHECK(norm_squared(psi) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(psi.sector(0).size == 1);
  CHECK(psi.sector(0).weight == 1.0);
  CHECK(psi.sector(1).weight == 0.05);
}

TEST_CASE("region measure counts sites times weight") {
  const auto spec = model4(0.5, 8, 6);
  SectoredWaveFunction psi(spec);
  std::vector<std::size_t> rect;
  for (int j = 2; j <= 4; ++j)
    for (int i = 1; i <= 4; ++i) rect.push_back(psi.upper_index(i, j));
  CHECK(region_measure(psi, rect) == doctest::Approx(12 * 0.25));
  std::vector<std::size_t> line{psi.lower_index(0), psi.lower_index(5)};
  CHECK(region_measure(psi, line) == doctest::Approx(1.0));
  CHECK(spec.total_measure() == doctest::Approx(8 * 0.5 + 48 * 0.25));
}

TEST_CASE("lattice invariants") {
  CHECK_NOTHROW(model4(0.1, 4, 4).validate());
  CHECK_THROWS_AS(model4(0.0, 8, 8).validate(), DomainError);
  CHECK_THROWS_AS(model4(0.1, 3, 8).validate(), DomainError);
  CHECK_THROWS_AS(model4(0.1, 8, 3).validate(), DomainError);
  CHECK_THROWS_AS((LatticeSpec{0.1, 4, 8, ModelKind::Model3Radial}).validate(), DomainError);
  CHECK_THROWS_AS(model4(0.1, 70000, 40000).validate(), DomainError);
  ModelParams p;
  p.mass = -1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = ModelParams{};
  p.robin = RobinParams{1.0, 1.0, 0.1, 1.0, 0.0};
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("site configurations") {
  const auto spec = model4(0.5, 4, 4);
  SectoredWaveFunction psi(spec);
  const auto q = site_configuration(spec, psi.upper_index(3, 2));
  CHECK(q.sector == 2);
  CHECK(q.coords[0] == doctest::Approx(0.5));
  CHECK(q.coords[1] == doctest::Approx(1.0));
  CHECK(site_configuration(spec, 0).coords[0] == doctest::Approx(-1.0));
  CHECK(site_configuration(model3(0.1, 8), 0) == Configuration::empty_config());
  CHECK(site_configuration(model3(0.1, 8), 3).coords[0] == doctest::Approx(0.3));
}

TEST_CASE("snapshot JSON round trip uses the documented field names") {
  std::mt19937_64 gen(5);
  auto psi = testing::random_state(model4(0.2, 5, 4), gen);
  psi.set_time(1.25);
  const auto j = snapshot_to_json(psi);
  for (const char* key : {"eps", "nx", "ny", "model", "time", "sectors"}) CHECK(j.contains(key));
  CHECK(j["sectors"][0].contains("id"));
  CHECK(j["sectors"][0].contains("re"));
  CHECK(j["sectors"][0].contains("im"));
  // x runs fastest inside the upper sector
  CHECK(j["sectors"][1]["re"][1].get<double>() == psi.upper(1, 1).real());
  const auto back = snapshot_from_json(j);
  CHECK(back.spec() == psi.spec());
  CHECK(back.time() == psi.time());
  for (std::size_t k = 0; k < psi.size(); ++k) CHECK(back[k] == psi[k]);

  const auto path = (std::filesystem::temp_directory_path() / "ibcsim_snapshot_test.json").string();
  write_json_file(path, j);
  CHECK(snapshot_from_json(read_json_file(path)).amplitudes()[7] == psi[7]);
  std::remove(path.c_str());
}
