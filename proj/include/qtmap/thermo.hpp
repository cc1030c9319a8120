// Thermodynamic accounting along a driving protocol: strong-coupling work and
// heat, weak-coupling baselines, entropy/free-energy columns, and the
// delta_max comparison quantities between the two bookkeepings.
#pragma once

#include <optional>

#include "qtmap/models.hpp"

namespace qtmap {

// rho = e^{-beta h}/Z and Z = Tr e^{-beta h}, computed with a shifted
// exponent so large spectra do not overflow.
std::pair<Operator, double> gibbs(const Operator& h, double beta);

// ln Tr e^{-beta h} via log-sum-exp.
double log_partition(const Operator& h, double beta);

struct ThermoConfig {
  double beta = 1.0;
  double tau_prime = 2.0;
  int n_steps = 4096;
  bool quasi_static = false;
  // Empty: composite Gibbs state of the coupled family at t=0. A custom
  // state forces the dense full-space propagation path.
  std::optional<Operator> initial_state;
};

struct ThermoPoint {
  double t = 0;
  double W = 0;
  double W_w = 0;
  double Q = 0;
  double Q_w = 0;
  double E = 0;
  double S_v = 0;
  double D_rel = 0;
  double Delta_S = 0;
  double F = 0;
  double delta_W = 0;
  double delta_Q = 0;
  double first_law_residual = 0;
};

struct ThermoSeries {
  std::vector<ThermoPoint> rows;
  double delta_max_W = 0;
  double delta_max_Q = 0;
};

// Trapezoidal accumulation per step i -> i+1:
//   dW   = Tr(rho_bar d_total)            (total-family work)
//   dQ   = dQ_w + dW_w - dW               (heat, correction-term form)
//   dW_w = Tr_s(rho_s_bar dH_s)           (bare baseline)
//   dQ_w = Tr_s(H_s_bar d rho_s)
// E(t) = Tr_s(H_s(t) rho_s(t)). Quasi-static mode pins the state to the
// instantaneous Gibbs state at each node instead of evolving it.
ThermoSeries run_protocol(const ProtocolModel& m, const ThermoConfig& cfg);

struct EntropyTerms {
  double S_v = 0;
  double D_rel = 0;
  double Delta_S = 0;
};

// S_v is the von Neumann entropy of the reduced evolved state (or of the
// reduced pinned Gibbs state in quasi-static mode); D_rel is the relative
// entropy of the reduced total-family Gibbs state w.r.t. the bare system
// Gibbs state; Delta_S = change of S_v + D_rel relative to t=0.
EntropyTerms entropy_terms(const ProtocolModel& m, const ThermoConfig& cfg,
                           double t);

// F(t) = -(1/beta) ln Tr_s e^{-beta H_s(t)}.
double free_energy(const ProtocolModel& m, double beta, double t);

// Quasi-static run; returns |dF - (dE - T dS)| with dS = beta * Q read off
// the pinned-path heat. Converges with dt.
double delta_f_identity_check(const ProtocolModel& m, ThermoConfig cfg);

}  // namespace qtmap
