#include "qtmap/evolution.hpp"

#include <cmath>
#include <stdexcept>

namespace qtmap {

PropagatorResult propagate(const std::function<Operator(double)>& h_of_t,
                           const TimeGrid& grid) {
  if (grid.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  const double dt = grid.dt();
  Operator h0 = h_of_t(grid.midpoint(0));
  const Eigen::Index d = h0.dim();
  Mat u = Mat::Identity(d, d);
  for (int i = 0; i < grid.n_steps; ++i) {
    const Operator h = (i == 0) ? std::move(h0) : h_of_t(grid.midpoint(i));
    if (herm_residual(h.mat) > kHermTol)
      throw std::invalid_argument("hermiticity violated");
    Operator step = herm_exp(h, cplx(0.0, -dt));
    u = step.mat * u;
  }
  if (unitary_residual(u) > kUnitaryTol)
    throw std::runtime_error("propagation lost unitarity");
  PropagatorResult out{Operator(std::move(u), Structure::unitary), grid, 2};
  return out;
}

ThreeStageResult three_stage_decompose(const ProtocolModel& m,
                                       double tau_prime, int n_steps) {
  TimeGrid grid{0.0, tau_prime, n_steps};
  PropagatorResult full = propagate(m.h_total, grid);
  PropagatorResult uc = propagate(m.h_uc, grid);
  Mat composed = m.exp_plus.mat * uc.U.mat * m.exp_minus.mat;
  ThreeStageResult out{m.exp_plus, uc.U, m.exp_minus,
                       max_abs(full.U.mat - composed)};
  return out;
}

double interaction_picture_identity(const ProtocolModel& m, Endpoint which,
                                    double tau, int n_steps,
                                    double tau_prime) {
  if (tau <= 0) throw std::invalid_argument("switching duration must be positive");
  const double t_ref = (which == Endpoint::initial) ? 0.0 : tau_prime;
  const double c = (which == Endpoint::initial ? +1.0 : -1.0) * m.g / tau;
  Operator h_uc = m.h_uc(t_ref);

  // Rotating generator G(s) = exp(-i H_uc s) G exp(+i H_uc s).
  auto h_of_s = [&](double s) {
    Operator rot = herm_exp(h_uc, cplx(0.0, -s));
    Mat g_rot = rot.mat * m.G.mat * rot.mat.adjoint();
    Mat h = h_uc.mat + c * g_rot;
    return Operator(0.5 * (h + h.adjoint()), Structure::hermitian);
  };

  TimeGrid grid{0.0, tau, n_steps};
  PropagatorResult num = propagate(h_of_s, grid);

  Operator drift = herm_exp(h_uc, cplx(0.0, -tau));
  const Operator& kick = (which == Endpoint::initial) ? m.exp_minus : m.exp_plus;
  Mat closed = drift.mat * kick.mat;
  return max_abs(num.U.mat - closed);
}

SwitchingWork switching_work(const ProtocolModel& m, double beta,
                             double tau_switch, double tau_prime) {
  if (tau_switch <= 0)
    throw std::invalid_argument("switching duration must be positive");
  SwitchingWork out;
  for (int stage = 0; stage < 2; ++stage) {
    const bool turn_on = (stage == 0);
    const double t_ref = turn_on ? 0.0 : tau_prime;
    Operator h_uc = m.h_uc(t_ref);
    Operator h_tot = m.h_total(t_ref);
    // Gibbs state of the mapped total family at the stage endpoint.
    Operator w = herm_exp(h_tot, cplx(-beta, 0.0));
    Mat rho = w.mat / w.mat.trace().real();
    Operator rot = herm_exp(h_uc, cplx(0.0, -tau_switch));
    Mat g_tau = rot.mat * m.G.mat * rot.mat.adjoint();
    const double tr_tau = (rho * g_tau).trace().real();
    const double tr_0 = (rho * m.G.mat).trace().real();
    const double w_val = (m.g / tau_switch) * (tr_tau - tr_0);
    if (turn_on)
      out.W_minus = +w_val;
    else
      out.W_plus = -w_val;
  }
  return out;
}

}  // namespace qtmap
