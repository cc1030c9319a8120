#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qtmap/evolution.hpp"
#include "qtmap/models.hpp"
#include "qtmap/operators.hpp"

using namespace qtmap;

namespace {

std::function<Operator(double)> driven_qubit() {
  return [](double t) {
    return Operator(Mat(pauli_x() + t * pauli_z()), Structure::hermitian);
  };
}

}  // namespace

TEST_CASE("constant generator propagates exactly") {
  auto h = [](double) {
    return Operator(Mat(0.7 * pauli_x() - 0.2 * pauli_z()),
                    Structure::hermitian);
  };
  const PropagatorResult r = propagate(h, TimeGrid{0.0, 1.7, 3});
  const Mat exact = herm_exp(h(0.0), cplx(0, -1.7)).mat;
  CHECK(max_abs(Mat(r.U.mat - exact)) < 1e-13);
  CHECK(r.scheme_order == 2);
}

TEST_CASE("midpoint stepping converges at second order") {
  auto h = driven_qubit();
  const Mat ref = propagate(h, TimeGrid{0.0, 1.0, 4096}).U.mat;
  const double e64 = max_abs(Mat(propagate(h, TimeGrid{0.0, 1.0, 64}).U.mat - ref));
  const double e128 =
      max_abs(Mat(propagate(h, TimeGrid{0.0, 1.0, 128}).U.mat - ref));
  CHECK(e64 / e128 > 3.5);
  CHECK(e64 / e128 < 4.5);
}

TEST_CASE("propagator stays unitary over long horizons") {
  auto h = driven_qubit();
  const PropagatorResult r = propagate(h, TimeGrid{0.0, 50.0, 2000});
  CHECK(unitary_residual(r.U.mat) < 1e-10);
}

TEST_CASE("propagate validates its inputs") {
  auto bad = [](double) {
    Mat a(2, 2);
    a << 0, 1, 0, 0;
    return Operator(a, Structure::general);
  };
  CHECK_THROWS_WITH(propagate(bad, TimeGrid{0.0, 1.0, 4}),
                    "hermiticity violated");
  auto h = driven_qubit();
  CHECK_THROWS(propagate(h, TimeGrid{0.0, 1.0, 0}));
}

TEST_CASE("coupled propagator splits into dressing and uncoupled flow") {
  SpinModelParams p;
  p.n_bath = 2;
  p.g = 0.3;
  const ProtocolModel m = spin_protocol_model(p);
  const ThreeStageResult r = three_stage_decompose(m, 2.0, 512);
  CHECK(r.residual < 1e-12);
  CHECK(unitary_residual(r.U_uc.mat) < 1e-10);
  CHECK(max_abs(Mat(r.U_plus.mat - m.exp_plus.mat)) < 1e-13);
  CHECK(max_abs(Mat(r.U_minus.mat - m.exp_minus.mat)) < 1e-13);
}

TEST_CASE("rotating-frame switching factorization at zero coupling") {
  SpinModelParams p;
  p.n_bath = 2;
  p.g = 0.0;
  const ProtocolModel m = spin_protocol_model(p);
  CHECK(interaction_picture_identity(m, Endpoint::initial, 2.0, 64) < 1e-12);
  CHECK(interaction_picture_identity(m, Endpoint::final, 2.0, 64, 2.0) <
        1e-12);
}

TEST_CASE("rotating-frame identity converges at second order") {
  SpinModelParams p;
  p.n_bath = 2;
  p.g = 0.3;
  const ProtocolModel m = spin_protocol_model(p);
  const double r256 =
      interaction_picture_identity(m, Endpoint::initial, 2.0, 256);
  const double r512 =
      interaction_picture_identity(m, Endpoint::initial, 2.0, 512);
  CHECK(r256 / r512 > 3.5);
  CHECK(r256 / r512 < 4.5);
  CHECK(interaction_picture_identity(m, Endpoint::initial, 2.0, 2048) < 1e-5);
  CHECK(interaction_picture_identity(m, Endpoint::final, 2.0, 2048, 2.0) <
        1e-5);
}

TEST_CASE("switching work vanishes without coupling") {
  SpinModelParams p;
  p.n_bath = 2;
  p.g = 0.0;
  const ProtocolModel m = spin_protocol_model(p);
  const SwitchingWork w = switching_work(m, 1.0, 100.0, 2.0);
  CHECK(std::abs(w.W_minus) < 1e-12);
  CHECK(std::abs(w.W_plus) < 1e-12);
}

TEST_CASE("switching work scales inversely with the switching duration") {
  SpinModelParams p;
  p.n_bath = 2;
  p.g = 0.3;
  const ProtocolModel m = spin_protocol_model(p);
  const SwitchingWork slow = switching_work(m, 1.0, 200.0, 2.0);
  const SwitchingWork fast = switching_work(m, 1.0, 100.0, 2.0);
  REQUIRE(std::abs(slow.W_minus) > 0);
  const double ratio = std::abs(fast.W_minus / slow.W_minus);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("switching work needs a positive duration") {
  SpinModelParams p;
  p.n_bath = 2;
  p.g = 0.3;
  const ProtocolModel m = spin_protocol_model(p);
  CHECK_THROWS_WITH(switching_work(m, 1.0, 0.0, 2.0),
                    "switching duration must be positive");
}
