// Model builders: central spin in a transverse-field Ising bath, and a
// single-mode Caldeira-Leggett-like oscillator pair. Each model comes in two
// presentations connected by the unitary map exp(igG): the uncoupled family
// H_uc(t) = H_s(t) (x) I + I (x) H_b, and the coupled family
// H_total(t) = H_sys_dressed(t) + H_bath_dressed + H_int(t).
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qtmap/operators.hpp"

namespace qtmap {

struct SpinModelParams {
  double lambda_x0 = 1.0;
  double lambda_z0 = 2.5;
  double alpha_x = 1.0;
  double alpha_z = -0.6;
  double omega_b = 1.0;
  double h = 1.0;
  double g = 0.0;
  int n_bath = 6;
  enum class Boundary { open, periodic };
  Boundary boundary = Boundary::open;

  double lambda_x(double t) const { return lambda_x0 * (1.0 + alpha_x * t); }
  double lambda_z(double t) const { return lambda_z0 * (1.0 + alpha_z * t); }
};

struct OscillatorModelParams {
  double mass_m = 1.0;
  double omega_s0 = 2.83;
  double alpha = -0.1;
  double omega_bath = 1.0;
  double g = 0.1;
  double g_1 = 1.0;
  int n_max_sys = 30;
  int n_max_bath = 30;

  double omega_s(double t) const { return omega_s0 * (1.0 + alpha * t); }
  double lambda_t(double t) const {
    const double w = omega_s(t);
    return mass_m * w * w;
  }
};

struct ModelArtifacts {
  DimensionLayout layout;
  Operator H_s;   // system-local
  Operator H_b;   // bath-local
  Operator G;     // composite
  Operator H_uc;  // composite
  bool has_mapped = false;
  Operator H_total;         // composite, coupled presentation
  Operator H_sys_dressed;   // composite embedding
  Operator H_bath_dressed;  // composite embedding
  Operator H_int;           // composite
};

struct MappedFamily {
  Operator H_sys;   // composite embedding of the dressed system part
  Operator H_bath;  // composite embedding of the dressed bath part
  Operator H_int;   // composite interaction part
};

ModelArtifacts build_spin_uncoupled(const SpinModelParams& p, double t);

// Closed-form coupled family for the spin model; the sum of the three parts
// equals conjugate(exp(igG), H_uc(t)).
MappedFamily build_spin_total_analytic(const SpinModelParams& p, double t);

// Fills the mapped fields of build_spin_uncoupled from the analytic family.
ModelArtifacts build_spin_full(const SpinModelParams& p, double t);

// Residual of the angular-momentum rotation identity
// exp(ig Sx Jx) Jz exp(-ig Sx Jx) = Jz cos(g Sx) + Jy sin(g Sx)
// with J the spin-1/2 system operators and Sx the bath Pauli-x sum.
double rotation_identity_residual(double g, int n_bath);

ModelArtifacts build_oscillator_uncoupled(const OscillatorModelParams& p,
                                          double t);

struct OscillatorMappedReport {
  double max_deviation = 0;   // coupled-vs-analytic mismatch on the window
  double kinetic_coeff = 0;   // fitted p^2 coefficient of the mapped family
  double kinetic_expected = 0;  // 1/(2 M_s) with the renormalized mass
  int window = 0;             // Fock indices 0..window compared per factor
};

// Compares conjugate(exp(igG), H_uc(t)) against the analytic coupled family
// (renormalized mass, displaced bath quadrature, bilinear couplings) on the
// truncation-interior Fock window.
OscillatorMappedReport oscillator_mapped_check(const OscillatorModelParams& p,
                                               double t);

// Time-dependent protocol bundle consumed by evolution/thermo/fluctuation.
// H_s(t) = sum_j coeffs(t)[j] * coupling_ops[j] with system-local operators.
struct ProtocolModel {
  std::string name;  // "spin" or "oscillator"
  DimensionLayout layout;
  double g = 0.0;
  Operator G;          // composite
  Operator exp_plus;   // exp(+igG)
  Operator exp_minus;  // exp(-igG)
  Operator H_b;        // bath-local
  std::vector<Operator> coupling_ops;
  std::function<std::vector<double>(double)> coeffs;
  std::function<Operator(double)> h_s;      // system-local
  std::function<Operator(double)> h_uc;     // composite
  std::function<Operator(double)> h_total;  // composite, coupled presentation
};

ProtocolModel spin_protocol_model(const SpinModelParams& p);
ProtocolModel oscillator_protocol_model(const OscillatorModelParams& p);

}  // namespace qtmap
