#pragma once

// SiV- fine structure, strain couplings and effective spin-phonon coupling
// schemes. Fine-structure energies are ordinary frequencies in GHz, strain
// couplings alpha/beta/gamma ordinary frequencies in Hz.

#include "phonobus/hilbert.hpp"
#include "phonobus/lindblad.hpp"
#include "phonobus/parallel.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phonobus::strain {

using Matrix3 = Eigen::Matrix3d;

struct StrainTensor {
  Matrix3 e = Matrix3::Zero();  // cubic axes [100], [010], [001]

  StrainTensor() = default;
  explicit StrainTensor(const Matrix3& m) : e(m) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("StrainTensor: not symmetric");
    }
  }
  static StrainTensor from_components(double e11, double e22, double e33, double e12, double e13, double e23) {
    Matrix3 m;
    m << e11, e12, e13, e12, e22, e23, e13, e23, e33;
    return StrainTensor(m);
  }
};

struct DefectStrainComponents {
  double eps_xx_minus_yy = 0.0;
  double eps_zx = 0.0;
  double eps_xy = 0.0;
  double eps_yz = 0.0;
};

struct SusceptibilityConstants {
  double t_parallel = 1e15;  // Hz/strain
  double t_perp = 1e15;
  double d = 1e15;
  double f = 1e15;
};

/// Defect axes: x || [-1 -1 2], y || [-1 1 0], z || [1 1 1]. The general
/// (non-symmetrized) index form is kept.
inline DefectStrainComponents cubic_to_defect(const StrainTensor& s) {
  auto e = [&](int i, int j) { return s.e(i - 1, j - 1); };
  DefectStrainComponents out;
  out.eps_xx_minus_yy =
      (-e(1, 1) - e(2, 2) + 2.0 * e(3, 3) + 2.0 * (e(1, 2) + e(2, 1)) - (e(1, 3) + e(3, 1)) - (e(2, 3) + e(3, 2))) / 3.0;
  out.eps_zx = -(e(1, 1) + e(2, 2) - 2.0 * e(3, 3) - 2.0 * e(1, 3) - 2.0 * e(2, 3) + e(1, 2) + e(2, 1) + e(3, 1) +
                 e(3, 2)) /
               (3.0 * std::sqrt(2.0));
  out.eps_xy = (e(1, 1) - e(1, 2) + e(2, 1) - e(2, 2) - 2.0 * e(3, 1) + 2.0 * e(3, 2)) / (2.0 * std::sqrt(3.0));
  out.eps_yz = (-e(1, 1) - e(1, 2) - e(1, 3) + e(2, 1) + e(2, 2) + e(2, 3)) / std::sqrt(6.0);
  return out;
}

struct StrainCouplings {
  double alpha = 0.0;  // A1g, uniform shift; not used downstream
  double beta = 0.0;
  double gamma = 0.0;
};

/// alpha needs the defect-frame diagonal, which the four transformed
/// combinations do not carry; pass eps_xx + eps_yy and eps_zz when needed.
inline StrainCouplings strain_components(const DefectStrainComponents& e, const SusceptibilityConstants& k,
                                         double eps_xx_plus_yy = 0.0, double eps_zz = 0.0) {
  return {k.t_perp * eps_xx_plus_yy + k.t_parallel * eps_zz, k.d * e.eps_xx_minus_yy + k.f * e.eps_zx,
          -2.0 * k.d * e.eps_xy + k.f * e.eps_yz};
}

struct FineStructureConfig {
  double lambda_so = 23.0;  // GHz
  double B_z = 0.0;         // T
  double B_x = 0.0;         // T
  double gamma_S = 28.0;    // GHz/T

  void validate() const {
    if (!(lambda_so > 0.0)) throw std::invalid_argument("FineStructureConfig: lambda_so must be > 0");
  }
};

/// Basis {e_y up, e_y down, e_x up, e_x down}, GHz.
inline ComplexMatrix fine_structure_hamiltonian(const FineStructureConfig& cfg) {
  cfg.validate();
  const double bz = cfg.B_z * cfg.gamma_S;
  const Complex il(0.0, cfg.lambda_so);
  ComplexMatrix h = ComplexMatrix::Zero(4, 4);
  h(0, 0) = bz;
  h(1, 1) = -bz;
  h(2, 2) = bz;
  h(3, 3) = -bz;
  h(0, 2) = -il;
  h(2, 0) = il;
  h(1, 3) = il;
  h(3, 1) = -il;
  return h;
}

/// nu_1..nu_4 in GHz.
inline std::array<double, 4> fine_structure_energies(const FineStructureConfig& cfg) {
  const double bz = cfg.B_z * cfg.gamma_S, l = cfg.lambda_so;
  return {-bz - l, -bz + l, bz + l, bz - l};
}

/// Columns are psi_1..psi_4 in the spin-orbit basis.
inline ComplexMatrix fine_structure_eigenvectors() {
  const double r = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  ComplexMatrix v = ComplexMatrix::Zero(4, 4);
  v(1, 0) = -i * r;
  v(3, 0) = r;
  v(1, 1) = i * r;
  v(3, 1) = r;
  v(0, 2) = -i * r;
  v(2, 2) = r;
  v(0, 3) = i * r;
  v(2, 3) = r;
  return v;
}

/// Transverse field B_x gamma_S flipping the spin within each orbital, GHz.
inline ComplexMatrix transverse_field_hamiltonian(const FineStructureConfig& cfg) {
  const double bx = cfg.B_x * cfg.gamma_S;
  ComplexMatrix h = ComplexMatrix::Zero(4, 4);
  h(0, 1) = h(1, 0) = bx;
  h(2, 3) = h(3, 2) = bx;
  return h;
}

struct StrainHamiltonians {
  ComplexMatrix beta;   // in the {psi_1..psi_4} basis
  ComplexMatrix gamma;
};

inline StrainHamiltonians strain_hamiltonians(double beta, double gamma) {
  StrainHamiltonians h{ComplexMatrix::Zero(4, 4), ComplexMatrix::Zero(4, 4)};
  h.beta(0, 1) = h.beta(1, 0) = beta;
  h.beta(2, 3) = h.beta(3, 2) = beta;
  const Complex ig(0.0, gamma);
  h.gamma(0, 1) = ig;
  h.gamma(1, 0) = -ig;
  h.gamma(2, 3) = ig;
  h.gamma(3, 2) = -ig;
  return h;
}

struct StaticFieldCoupling {
  Complex perturbative;   // <psi'_4|H_strain|psi'_1>, Hz
  Complex exact;
  double field_ratio = 0.0;  // |B_x gamma_S| / (2 lambda)
  bool weak_field_warning = false;  // field_ratio > 0.2
};

/// First-order coupling of the field-dressed qubit states and the same matrix
/// element between exact eigenvectors of H_tot + H_Bx. The exact value needs
/// psi_1 and psi_4 non-degenerate, i.e. B_z != 0.
inline StaticFieldCoupling static_field_coupling(const FineStructureConfig& cfg, double beta, double gamma) {
  cfg.validate();
  const auto nu = fine_structure_energies(cfg);
  const double bx = cfg.B_x * cfg.gamma_S;
  const Complex factor = bx / (nu[0] - nu[2]) + bx / (nu[3] - nu[1]);
  StaticFieldCoupling out;
  out.perturbative = beta * factor + Complex(0.0, -gamma) * factor;
  out.field_ratio = std::abs(bx) / (2.0 * cfg.lambda_so);
  out.weak_field_warning = out.field_ratio > 0.2;

  const ComplexMatrix v = fine_structure_eigenvectors();
  const Eigensystem es = eigensystem_hermitian(ComplexMatrix(fine_structure_hamiltonian(cfg) + transverse_field_hamiltonian(cfg)));
  auto dressed = [&](int k) {
    Ket best;
    double overlap = -1.0;
    for (int c = 0; c < 4; ++c) {
      const Ket col = es.vectors.col(c);
      const double o = std::abs(v.col(k).dot(col));
      if (o > overlap) {
        overlap = o;
        best = col;
      }
    }
    const Complex p = v.col(k).dot(best);
    return Ket(best * (std::abs(p) / p));
  };
  const Ket p1 = dressed(0), p4 = dressed(3);
  const StrainHamiltonians hs = strain_hamiltonians(beta, gamma);
  const ComplexMatrix h_strain = v * (hs.beta + hs.gamma) * v.adjoint();
  out.exact = p4.dot(h_strain * p1);
  return out;
}

struct MWDriveConfig {
  // Any consistent angular unit; the simulations below use rad/us.
  double Delta = 0.0;    // E_2 - E_1
  double omega_B = 0.0;  // E_4 - E_1
  double omega_p = 0.0;
  double omega_d = 0.0;
  std::function<double(double)> Omega = [](double) { return 0.0; };
  std::function<double(double)> theta = [](double) { return 0.0; };
  double g_orb = 0.0;

  double detuning() const { return omega_p - Delta; }

  void validate(double t = 0.0) const {
    if (std::abs(omega_d - (omega_p - omega_B)) > 1e-9 * std::max({1.0, std::abs(omega_p), std::abs(omega_B)})) {
      throw std::invalid_argument("MWDriveConfig: drive must satisfy omega_d = omega_p - omega_B");
    }
    if (detuning() == 0.0 || std::abs(Omega(t)) >= std::abs(detuning())) {
      throw std::domain_error("MWDriveConfig: adiabatic condition violated (|Omega| >= |delta|)");
    }
  }
};

/// g_orb Omega(t) e^{i theta(t)} / delta with delta = omega_p - Delta.
inline Complex mw_effective_coupling(const MWDriveConfig& cfg, double t = 0.0) {
  cfg.validate(t);
  return cfg.g_orb * cfg.Omega(t) * std::exp(Complex(0.0, cfg.theta(t))) / cfg.detuning();
}

struct RamanConfig {
  double Omega_A = 0.0, Omega_C = 0.0;
  double theta_A = 0.0, theta_C = 0.0;
  double omega_A = 0.0, omega_C = 0.0, omega_E = 0.0, omega_p = 0.0, omega_B = 0.0, Delta = 0.0;
  double g_orb = 0.0;
};

struct RamanCoupling {
  Complex value;
  double perturbative_ratio = 0.0;
  bool perturbative_warning = false;  // ratio above 0.1
};

inline RamanCoupling raman_effective_coupling(const RamanConfig& c) {
  const double scale = std::max({1.0, std::abs(c.omega_p), std::abs(c.omega_A), std::abs(c.omega_C)});
  if (std::abs(c.omega_p - (c.omega_B + c.omega_A - c.omega_C)) > 1e-9 * scale) {
    throw std::invalid_argument("RamanConfig: drives must satisfy omega_p = omega_B + omega_A - omega_C");
  }
  const double denom = (c.omega_p - c.Delta) * (c.omega_C - c.omega_E + c.omega_p);
  if (denom == 0.0) throw std::domain_error("raman_effective_coupling: zero denominator");
  RamanCoupling r;
  r.value = c.Omega_A * std::exp(Complex(0.0, c.theta_A)) * c.Omega_C * std::exp(Complex(0.0, -c.theta_C)) * c.g_orb / denom;
  r.perturbative_ratio = std::abs(c.Omega_A * c.Omega_C / denom);
  r.perturbative_warning = r.perturbative_ratio > 0.1;
  return r;
}

struct EffectiveModelCheck {
  std::vector<double> times;
  std::vector<double> full;       // population of psi_4 in the driven 4-level model
  std::vector<double> effective;  // sin^2(|g_eff| t)
  double max_discrepancy = 0.0;
};

/// Rotating-frame MW scheme on [4 levels, phonon] started in |psi_1, 1>,
/// against the effective Jaynes-Cummings swap with g_eff^mw. Omega and theta
/// are taken constant at their t = 0 values.
inline EffectiveModelCheck validate_effective_model(const MWDriveConfig& cfg, double duration, std::size_t samples = 401,
                                                    int n_max = 2) {
  cfg.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("validate_effective_model: duration must be > 0");
  const CompositeSpace space({4, n_max});
  auto sigma = [&](int i, int j) {
    ComplexMatrix m = ComplexMatrix::Zero(4, 4);
    m(i - 1, j - 1) = 1.0;
    return embed(m, space, 0);
  };
  const ComplexMatrix b = embed(annihilation(n_max), space, 1);
  const double Om = cfg.Omega(0.0), th = cfg.theta(0.0), d = cfg.detuning(), g = cfg.g_orb;
  const ComplexMatrix s42 = sigma(4, 2), s12 = sigma(1, 2);
  const ComplexMatrix bs = b.adjoint() * s12;
  const Complex i(0.0, 1.0);

  // X e^{i phi} + h.c. = cos(phi) (X + X^+) + sin(phi) i (X - X^+)
  lindblad::TimeDependentHamiltonian h(ComplexMatrix::Zero(space.total_dim(), space.total_dim()));
  h.add([=](double t) { return Om * std::cos(th + d * t); }, ComplexMatrix(s42 + s42.adjoint()));
  h.add([=](double t) { return Om * std::sin(th + d * t); }, ComplexMatrix(i * (s42 - s42.adjoint())));
  h.add([=](double t) { return g * std::cos(d * t); }, ComplexMatrix(bs + bs.adjoint()));
  h.add([=](double t) { return g * std::sin(d * t); }, ComplexMatrix(i * (bs - bs.adjoint())));

  const DensityMatrix rho0 = DensityMatrix::pure(kron(basis_ket(4, 0), basis_ket(n_max, 1)));
  IntegratorConfig icfg;
  icfg.rel_tol = 1e-9;
  icfg.abs_tol = 1e-11;
  const auto traj = lindblad::evolve(h, {}, std::nullopt, rho0, {0.0, duration, samples}, icfg,
                                     {{"p4", ComplexMatrix(sigma(4, 4))}});
  EffectiveModelCheck out;
  out.times = traj.times;
  out.full = traj.observable("p4");
  const double geff = g == 0.0 ? 0.0 : std::abs(mw_effective_coupling(cfg));
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    out.effective.push_back(std::pow(std::sin(geff * out.times[k]), 2));
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(out.full[k] - out.effective[k]));
  }
  return out;
}

struct StrainSample {
  std::array<double, 3> position{};  // nm
  StrainTensor strain;
};

struct CouplingPoint {
  std::array<double, 3> position{};
  double g_orb = 0.0;  // Hz
};

struct CouplingMap {
  std::vector<CouplingPoint> points;
  double max_abs_g_orb = 0.0;
};

/// g_orb = d (eps_xx - eps_yy) in the defect frame after scaling the raw
/// strain by `normalization`.
inline CouplingMap coupling_map(const std::vector<StrainSample>& samples, const SusceptibilityConstants& k,
                                double normalization, std::size_t workers = 1) {
  CouplingMap map;
  map.points = parallel_map<CouplingPoint>(samples.size(), workers, [&](std::size_t i) {
    const auto e = cubic_to_defect(samples[i].strain);
    return CouplingPoint{samples[i].position, k.d * normalization * e.eps_xx_minus_yy};
  });
  for (const auto& p : map.points) map.max_abs_g_orb = std::max(map.max_abs_g_orb, std::abs(p.g_orb));
  return map;
}

/// CSV with header x,y,z,e11,e22,e33,e12,e13,e23. Errors name the 1-based line.
inline std::vector<StrainSample> read_strain_csv(std::istream& in) {
  static const std::vector<std::string> header{"x", "y", "z", "e11", "e22", "e33", "e12", "e13", "e23"};
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line) || split(line) != header) {
    throw std::runtime_error("strain csv: line 1: expected header x,y,z,e11,e22,e33,e12,e13,e23");
  }
  std::vector<StrainSample> out;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != 9) throw std::runtime_error("strain csv: line " + std::to_string(lineno) + ": expected 9 columns");
    std::array<double, 9> v{};
    for (std::size_t c = 0; c < 9; ++c) {
      std::size_t used = 0;
      try {
        v[c] = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[c].size() || !std::isfinite(v[c])) {
        throw std::runtime_error("strain csv: line " + std::to_string(lineno) + ": bad number in column " + header[c]);
      }
    }
    out.push_back({{v[0], v[1], v[2]}, StrainTensor::from_components(v[3], v[4], v[5], v[6], v[7], v[8])});
  }
  return out;
}

}  // namespace phonobus::strain
