// Minimal library use: one spiral at fixed beta, classified and reconstructed.
//
//   quick_run [beta] [max_steps]

#include <cstdio>
#include <cstdlib>

#include "meander/quotient.hpp"
#include "meander/sweep.hpp"
#include "meander/trajectory.hpp"

int main(int argc, char** argv) {
  using namespace meander;
  ModelParams model;
  model.beta = argc > 1 ? std::atof(argv[1]) : 0.6;
  RunBudget budget;
  if (argc > 2) budget.max_steps = std::atoll(argv[2]);

  const NumericalParams num;
  SimState s = fresh_seed(model, num, std::nullopt, 2000);
  const double theta0 = s.frame.theta, x0 = s.frame.RX, y0 = s.frame.RY;
  const RunOutcome run = run_until_resolved(s, budget);

  std::printf("beta=%.4f class=%s q_s=%.6f steps=%lld\n", model.beta,
              std::string(to_string(run.analysis.classification)).c_str(), run.analysis.q_s,
              static_cast<long long>(run.steps));
  if (run.analysis.period)
    std::printf("period=%.4f periods_measured=%zu\n", *run.analysis.period, run.analysis.n_periods);

  const TipPath path = reconstruct_tip(run.series, theta0, x0, y0);
  const TipPoint& end = path.points.back();
  std::printf("tip at t=%.3f: (%.4f, %.4f)\n", end.t, end.x, end.y);
  return 0;
}
