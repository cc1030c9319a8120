// Time-ordered propagators (midpoint-exponential products), the three-stage
// decomposition U = exp(+igG) U_uc exp(-igG), the ramped-coupling
// interaction-picture identity, and the switching work of the coupling
// on/off stages.
#pragma once

#include "qtmap/models.hpp"

namespace qtmap {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int n_steps = 1;

  double dt() const { return (t1 - t0) / n_steps; }
  double node(int i) const { return t0 + i * dt(); }
  double midpoint(int i) const { return t0 + (i + 0.5) * dt(); }
};

struct PropagatorResult {
  Operator U;
  TimeGrid grid;
  int scheme_order = 2;
};

// U = prod_{i=n..1} exp(-i h(t_{i-1/2}) dt), right-to-left time ordering.
PropagatorResult propagate(const std::function<Operator(double)>& h_of_t,
                           const TimeGrid& grid);

struct ThreeStageResult {
  Operator U_plus;   // exp(+igG)
  Operator U_uc;     // uncoupled-family propagator
  Operator U_minus;  // exp(-igG)
  double residual = 0;  // max|propagate(H_total).U - U_plus U_uc U_minus|
};

ThreeStageResult three_stage_decompose(const ProtocolModel& m,
                                       double tau_prime, int n_steps);

enum class Endpoint { initial, final };

// Propagates H_uc(t_ref) + c G(s) with the rotating generator
// G(s) = exp(-i H_uc s) G exp(+i H_uc s), c = +g/tau (initial) or -g/tau
// (final), and returns the max-norm deviation from the closed form
// exp(-i H_uc tau) exp(mp igG).
double interaction_picture_identity(const ProtocolModel& m, Endpoint which,
                                    double tau, int n_steps,
                                    double tau_prime = 2.0);

struct SwitchingWork {
  double W_minus = 0;  // turn-on stage, evaluated on the initial Gibbs state
  double W_plus = 0;   // turn-off stage, evaluated on the final Gibbs state
};

// W_minus = +(g/tau)[Tr(rho G(tau)) - Tr(rho G(0))] with the generator
// rotating under H_uc(0); W_plus carries the opposite sign and rotates under
// H_uc(tau_prime). Both vanish as 1/tau.
SwitchingWork switching_work(const ProtocolModel& m, double beta,
                             double tau_switch, double tau_prime);

}  // namespace qtmap
