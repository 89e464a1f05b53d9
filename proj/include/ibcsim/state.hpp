#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ibc {

using cplx = std::complex<double>;

enum class ModelKind { Model4Lattice, Model4Continuum, Model3Radial };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Grid geometry. For Model 4, sector 1 holds nx sites x_i = (i - nx/2) eps on a
/// periodic ring and sector 2 holds rows y_j = j eps, j = 1..ny (the y = 0 row
/// is eliminated through the boundary condition). For Model 3 the radial
/// sites are r_k = k eps, k = 1..ny, and nx must be 0.
struct LatticeSpec {
  double eps = 0.1;
  int nx = 0;
  int ny = 0;
  ModelKind model = ModelKind::Model4Continuum;

  bool is_model3() const { return model == ModelKind::Model3Radial; }
  std::size_t site_count() const;
  /// Total measure of the lattice configuration space.
  double total_measure() const;
  double x_of(int i) const { return (i - nx / 2) * eps; }
  double x_origin() const { return x_of(0); }
  double ring_length() const { return nx * eps; }

  /// Throws DomainError when an invariant is violated.
  void validate() const;

  bool operator==(const LatticeSpec&) const = default;
};

struct RobinParams {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 1.0;
  double theta = 0.0;

  double determinant() const { return alpha * delta - beta * gamma; }
  bool operator==(const RobinParams&) const = default;
};

struct ModelParams {
  double hbar = 1.0;
  double mass = 1.0;
  double g = 1.0;
  std::optional<RobinParams> robin;

  /// Robin coefficients in effect; the Dirichlet case is (1, 0, 0, 1, 0).
  RobinParams robin_or_dirichlet() const { return robin.value_or(RobinParams{}); }
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

/// Point of the process state. Sector 0 (Model 3) carries no coordinates.
struct Configuration {
  int sector = 0;
  int dim = 0;
  std::array<double, 2> coords{};

  static Configuration empty_config() { return {0, 0, {}}; }
  static Configuration line(int sector, double x) { return {sector, 1, {x, 0.0}}; }
  static Configuration plane(int sector, double x, double y) { return {sector, 2, {x, y}}; }

  bool operator==(const Configuration&) const = default;
};

struct SectorLayout {
  int id = 0;
  std::size_t offset = 0;
  std::size_t size = 0;
  double weight = 0.0;
};

/// Complex amplitudes over a disjoint union of sector grids. All sectors
/// live in one contiguous array; `sectors()` describes the partition.
class SectoredWaveFunction {
 public:
  SectoredWaveFunction() = default;
  explicit SectoredWaveFunction(const LatticeSpec& spec, double time = 0.0);

  const LatticeSpec& spec() const { return spec_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  std::span<const SectorLayout> sectors() const { return layout_; }
  const SectorLayout& sector(int id) const;
  bool has_sector(int id) const;

  std::span<cplx> amplitudes() { return amp_; }
  std::span<const cplx> amplitudes() const { return amp_; }
  std::span<cplx> sector_amplitudes(int id);
  std::span<const cplx> sector_amplitudes(int id) const;
  std::size_t size() const { return amp_.size(); }

  cplx& operator[](std::size_t k) { return amp_[k]; }
  const cplx& operator[](std::size_t k) const { return amp_[k]; }

  /// Measure weight of a global site index.
  double weight_of(std::size_t k) const;
  int sector_of(std::size_t k) const;

  // Model 4 site addressing (j = 1..ny).
  std::size_t lower_index(int i) const { return static_cast<std::size_t>(i); }
  std::size_t upper_index(int i, int j) const {
    return static_cast<std::size_t>(spec_.nx) + static_cast<std::size_t>(j - 1) * spec_.nx + i;
  }
  cplx lower(int i) const { return amp_[lower_index(i)]; }
  cplx upper(int i, int j) const { return amp_[upper_index(i, j)]; }

  // Model 3 site addressing (k = 1..nr); `radial` is w = sqrt(4 pi) r psi1.
  static constexpr std::size_t empty_index() { return 0; }
  std::size_t radial_index(int k) const { return static_cast<std::size_t>(k); }
  cplx empty() const { return amp_[0]; }
  cplx radial(int k) const { return amp_[radial_index(k)]; }

  SectoredWaveFunction& operator+=(const SectoredWaveFunction& o);
  SectoredWaveFunction& operator-=(const SectoredWaveFunction& o);
  SectoredWaveFunction& operator*=(cplx s);

  bool same_grid(const SectoredWaveFunction& o) const { return spec_ == o.spec_; }

 private:
  LatticeSpec spec_{};
  double time_ = 0.0;
  std::vector<SectorLayout> layout_;
  std::vector<cplx> amp_;
};

SectoredWaveFunction operator+(SectoredWaveFunction a, const SectoredWaveFunction& b);
SectoredWaveFunction operator-(SectoredWaveFunction a, const SectoredWaveFunction& b);
SectoredWaveFunction operator*(cplx s, SectoredWaveFunction a);

/// Weighted inner product sum_k mu_k conj(a_k) b_k. Throws ShapeError on
/// mismatched grids.
cplx inner_product(const SectoredWaveFunction& a, const SectoredWaveFunction& b);
double norm_squared(const SectoredWaveFunction& psi);
double norm(const SectoredWaveFunction& psi);

/// Throws DegenerateInputError for the zero vector.
SectoredWaveFunction normalize(const SectoredWaveFunction& psi);

/// |psi|^2 mass of one sector; psi must be normalized to 1e-8.
double sector_probability(const SectoredWaveFunction& psi, int sector_id);

SectoredWaveFunction conjugate(const SectoredWaveFunction& psi);

/// Sum of measure weights over the listed global sites.
double region_measure(const SectoredWaveFunction& psi, std::span<const std::size_t> sites);

/// Cell-centre configuration of a global site index.
Configuration site_configuration(const LatticeSpec& spec, std::size_t k);

}  // namespace ibc
