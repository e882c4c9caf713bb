#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace trq {

/// Finite-horizon tracking problem over a black-box one-interval step map.
/// The decision variable is the stacked input sequence; states are always the
/// exact rollout of the inputs from x0, so interval defects are zero by
/// construction. Stage k penalizes x_{k+1} against refs[k], the input against
/// u_ref, and soft violations of the state box.
struct ShootingProblem {
  using StepFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  int nx = 0;
  int nu = 0;
  int horizon = 0;
  StepFn step;
  Eigen::VectorXd x0;
  std::vector<Eigen::VectorXd> refs;  // horizon entries, targets for x_1..x_N
  Eigen::VectorXd q_diag;             // nx, >= 0
  Eigen::VectorXd r_diag;             // nu, >= 0
  Eigen::VectorXd u_ref;              // nu, input penalty center
  Eigen::VectorXd u_min, u_max;       // nu, hard box
  Eigen::VectorXd x_min, x_max;       // nx, soft box (+-inf disables)
  double state_bound_weight = 0.0;
  double cost_offset = 0.0;           // constant added to the reported cost

  void validate() const {
    if (nx < 1 || nu < 1 || horizon < 1)
      throw std::invalid_argument("shooting problem dimensions must be positive");
    if (!step) throw std::invalid_argument("shooting problem needs a step map");
    if (x0.size() != nx || static_cast<int>(refs.size()) != horizon)
      throw std::invalid_argument("x0/refs sizes inconsistent with problem dimensions");
    for (const auto& r : refs)
      if (r.size() != nx) throw std::invalid_argument("reference size mismatch");
    if (q_diag.size() != nx || x_min.size() != nx || x_max.size() != nx)
      throw std::invalid_argument("state weight/bound size mismatch");
    if (r_diag.size() != nu || u_ref.size() != nu || u_min.size() != nu || u_max.size() != nu)
      throw std::invalid_argument("input weight/bound size mismatch");
    if ((u_min.array() > u_max.array()).any() || (x_min.array() > x_max.array()).any())
      throw std::invalid_argument("bounds must satisfy min <= max");
    if ((q_diag.array() < 0.0).any() || (r_diag.array() < 0.0).any() || state_bound_weight < 0.0)
      throw std::invalid_argument("weights must be nonnegative");
  }
};

struct ShootingOptions {
  int max_iterations = 30;
  double kkt_tolerance = 1e-6;
  double fd_step = 1e-6;            // relative, scaled by max(1, |z_i|)
  double armijo_c1 = 1e-4;
  int max_linesearch_steps = 25;
  double levenberg_init = 1e-8;
};

struct ShootingSolution {
  std::vector<Eigen::VectorXd> inputs;  // horizon
  std::vector<Eigen::VectorXd> states;  // horizon + 1, rollout of inputs
  double cost = std::numeric_limits<double>::infinity();
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> merit_history;    // cost at start plus each accepted iterate
  double max_defect = std::numeric_limits<double>::infinity();
};

namespace detail {

inline Eigen::VectorXd clamp_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace detail

/// Forward-difference Jacobians of a step map at (x, u), step scaled per
/// component as fd_step * max(1, |z_i|).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fd_step_jacobians(
    const ShootingProblem::StepFn& step, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
    double fd_step) {
  const Eigen::VectorXd f0 = step(x, u);
  Eigen::MatrixXd a(f0.size(), x.size());
  Eigen::MatrixXd b(f0.size(), u.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = fd_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    a.col(i) = (step(xp, u) - f0) / h;
    xp[i] = x[i];
  }
  Eigen::VectorXd up = u;
  for (int i = 0; i < u.size(); ++i) {
    const double h = fd_step * std::max(1.0, std::abs(u[i]));
    up[i] = u[i] + h;
    b.col(i) = (step(x, up) - f0) / h;
    up[i] = u[i];
  }
  return {std::move(a), std::move(b)};
}

namespace detail {

inline bool try_rollout(const ShootingProblem& p, const std::vector<Eigen::VectorXd>& inputs,
                        std::vector<Eigen::VectorXd>& states) {
  states.assign(1, p.x0);
  states.reserve(p.horizon + 1);
  try {
    for (int k = 0; k < p.horizon; ++k) {
      Eigen::VectorXd next = p.step(states.back(), inputs[k]);
      if (!next.allFinite()) return false;
      states.push_back(std::move(next));
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

inline double rollout_cost(const ShootingProblem& p, const std::vector<Eigen::VectorXd>& states,
                           const std::vector<Eigen::VectorXd>& inputs) {
  double j = p.cost_offset;
  for (int k = 0; k < p.horizon; ++k) {
    const Eigen::VectorXd err = states[k + 1] - p.refs[k];
    const Eigen::VectorXd du = inputs[k] - p.u_ref;
    j += err.dot(p.q_diag.cwiseProduct(err)) + du.dot(p.r_diag.cwiseProduct(du));
    if (p.state_bound_weight > 0.0) {
      const Eigen::ArrayXd over = (states[k + 1] - p.x_max).array().max(0.0);
      const Eigen::ArrayXd under = (p.x_min - states[k + 1]).array().max(0.0);
      j += p.state_bound_weight * (over.square().sum() + under.square().sum());
    }
  }
  return j;
}

/// Gradient and Gauss-Newton Hessian of the rollout cost w.r.t. the stacked
/// input vector, via the sensitivity recursion T_{k+1} = A_k T_k + B_k E_k.
inline void condense(const ShootingProblem& p, const std::vector<Eigen::VectorXd>& states,
                     const std::vector<Eigen::VectorXd>& inputs, double fd_step,
                     Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  const int n = p.horizon * p.nu;
  grad.setZero(n);
  hess.setZero(n, n);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(p.nx, n);
  for (int k = 0; k < p.horizon; ++k) {
    const auto [a, b] = fd_step_jacobians(p.step, states[k], inputs[k], fd_step);
    if (k > 0)
      t.leftCols(k * p.nu) = a * t.leftCols(k * p.nu).eval();
    t.block(0, k * p.nu, p.nx, p.nu) = b;

    const Eigen::VectorXd err = states[k + 1] - p.refs[k];
    Eigen::VectorXd w_err = p.q_diag.cwiseProduct(err);
    Eigen::VectorXd q_eff = p.q_diag;
    if (p.state_bound_weight > 0.0) {
      for (int i = 0; i < p.nx; ++i) {
        const double over = std::max(0.0, states[k + 1][i] - p.x_max[i]);
        const double under = std::max(0.0, p.x_min[i] - states[k + 1][i]);
        if (over > 0.0 || under > 0.0) {
          w_err[i] += p.state_bound_weight * (over - under);
          q_eff[i] += p.state_bound_weight;
        }
      }
    }
    const auto tk = t.leftCols((k + 1) * p.nu);
    grad.head((k + 1) * p.nu).noalias() += 2.0 * tk.transpose() * w_err;
    hess.topLeftCorner((k + 1) * p.nu, (k + 1) * p.nu).noalias() +=
        2.0 * tk.transpose() * q_eff.asDiagonal() * tk;

    const Eigen::VectorXd du = inputs[k] - p.u_ref;
    grad.segment(k * p.nu, p.nu) += 2.0 * p.r_diag.cwiseProduct(du);
    hess.block(k * p.nu, k * p.nu, p.nu, p.nu) += 2.0 * p.r_diag.asDiagonal().toDenseMatrix();
  }
}

inline Eigen::VectorXd stack(const std::vector<Eigen::VectorXd>& vs, int per, int count) {
  Eigen::VectorXd out(per * count);
  for (int k = 0; k < count; ++k) out.segment(k * per, per) = vs[k];
  return out;
}

inline std::vector<Eigen::VectorXd> unstack(const Eigen::VectorXd& v, int per, int count) {
  std::vector<Eigen::VectorXd> out(count);
  for (int k = 0; k < count; ++k) out[k] = v.segment(k * per, per);
  return out;
}

}  // namespace detail

/// Projected Gauss-Newton over the condensed input sequence. Iterates are
/// always feasible rollouts; box constraints are enforced by projection inside
/// the backtracking line search; convergence is declared on the projected
/// gradient residual |U - clamp(U - grad)|_inf.
inline ShootingSolution solve_shooting(const ShootingProblem& problem,
                                       const ShootingOptions& options,
                                       const std::vector<Eigen::VectorXd>& initial_inputs) {
  problem.validate();
  if (static_cast<int>(initial_inputs.size()) != problem.horizon)
    throw std::invalid_argument("initial input sequence length must equal the horizon");

  const int n = problem.horizon * problem.nu;
  Eigen::VectorXd lo(n), hi(n);
  for (int k = 0; k < problem.horizon; ++k) {
    lo.segment(k * problem.nu, problem.nu) = problem.u_min;
    hi.segment(k * problem.nu, problem.nu) = problem.u_max;
  }

  // Internal variable scaling from the box widths: Newton damping and the
  // gradient fallback operate in units where one unit spans half a box side,
  // keeping percent-scale throttles and radian-scale tilts comparable. Pinned
  // or unbounded coordinates fall back to unit scale.
  Eigen::VectorXd uscale = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    if (std::isfinite(lo[i]) && std::isfinite(hi[i]) && hi[i] > lo[i])
      uscale[i] = 0.5 * (hi[i] - lo[i]);

  const bool trace = std::getenv("TRQ_OCP_TRACE") != nullptr;
  ShootingSolution sol;
  Eigen::VectorXd u = detail::clamp_box(detail::stack(initial_inputs, problem.nu, problem.horizon),
                                        lo, hi);
  std::vector<Eigen::VectorXd> inputs = detail::unstack(u, problem.nu, problem.horizon);
  std::vector<Eigen::VectorXd> states;
  if (!detail::try_rollout(problem, inputs, states)) {
    sol.inputs = inputs;
    sol.states.assign(problem.horizon + 1, problem.x0);
    return sol;  // infeasible start: cost/kkt stay infinite, converged stays false
  }
  double cost = detail::rollout_cost(problem, states, inputs);
  sol.merit_history.push_back(cost);

  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  double mu = options.levenberg_init;
  bool kkt_fresh = false;

  for (int it = 0; it < options.max_iterations; ++it) {
    try {
      detail::condense(problem, states, inputs, options.fd_step, grad, hess);
    } catch (const std::exception&) {
      break;  // linearization walked into invalid territory; keep the iterate
    }
    sol.kkt_residual = (u - detail::clamp_box(u - grad, lo, hi)).lpNorm<Eigen::Infinity>();
    kkt_fresh = true;
    if (sol.kkt_residual < options.kkt_tolerance) {
      sol.converged = true;
      break;
    }
    sol.iterations = it + 1;
    if (trace)
      std::fprintf(stderr, "  it %d cost=%.9e kkt=%.3e mu=%.1e\n", it, cost, sol.kkt_residual, mu);

    // Coordinates pinned at a bound with the gradient pushing further out are
    // held fixed this iteration; keeping them out of the Newton system stops
    // their curvature coupling from bending the free-coordinate step into an
    // ascent direction along the projection arc.
    constexpr double kActiveEps = 1e-10;
    std::vector<int> free_idx;
    free_idx.reserve(n);
    for (int i = 0; i < n; ++i) {
      const bool blocked_lo = u[i] <= lo[i] + kActiveEps && grad[i] > 0.0;
      const bool blocked_hi = u[i] >= hi[i] - kActiveEps && grad[i] < 0.0;
      if (!blocked_lo && !blocked_hi) free_idx.push_back(i);
    }

    auto line_search = [&](const Eigen::VectorXd& dir) {
      double alpha = 1.0;
      for (int ls = 0; ls < options.max_linesearch_steps; ++ls) {
        const Eigen::VectorXd u_cand = detail::clamp_box(u + alpha * dir, lo, hi);
        if ((u_cand - u).lpNorm<Eigen::Infinity>() < 1e-14) {
          if (trace) std::fprintf(stderr, "    ls %d alpha=%.3e projection ate step\n", ls, alpha);
          break;  // projection ate the step
        }
        std::vector<Eigen::VectorXd> cand_inputs =
            detail::unstack(u_cand, problem.nu, problem.horizon);
        std::vector<Eigen::VectorXd> cand_states;
        if (detail::try_rollout(problem, cand_inputs, cand_states)) {
          const double cand_cost = detail::rollout_cost(problem, cand_states, cand_inputs);
          const double slope = grad.dot(u_cand - u);
          if (trace && (ls < 3 || ls + 2 >= options.max_linesearch_steps))
            std::fprintf(stderr, "    ls %d alpha=%.3e cand=%.9e cost=%.9e slope=%.3e\n", ls,
                         alpha, cand_cost, cost, slope);
          if (cand_cost <= cost + options.armijo_c1 * std::min(0.0, slope) &&
              cand_cost < cost + 1e-14 * std::abs(cost)) {
            u = u_cand;
            inputs = std::move(cand_inputs);
            states = std::move(cand_states);
            cost = cand_cost;
            return true;
          }
        } else if (trace && ls < 3) {
          std::fprintf(stderr, "    ls %d alpha=%.3e rollout failed\n", ls, alpha);
        }
        alpha *= 0.5;
      }
      return false;
    };

    bool accepted = false;
    if (!free_idx.empty()) {
      const int nf = static_cast<int>(free_idx.size());
      Eigen::MatrixXd hf(nf, nf);
      Eigen::VectorXd gf(nf);
      for (int a = 0; a < nf; ++a) {
        const double sa = uscale[free_idx[a]];
        gf[a] = sa * grad[free_idx[a]];
        for (int b = 0; b < nf; ++b)
          hf(a, b) = sa * hess(free_idx[a], free_idx[b]) * uscale[free_idx[b]];
      }
      hf.diagonal().array() += mu;  // damping acts in box-scaled units
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(hf);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd df = -ldlt.solve(gf);
        Eigen::VectorXd step_dir = Eigen::VectorXd::Zero(n);
        for (int a = 0; a < nf; ++a) step_dir[free_idx[a]] = uscale[free_idx[a]] * df[a];
        accepted = line_search(step_dir);
      }
    }

    if (accepted) {
      sol.merit_history.push_back(cost);
      mu = std::max(1e-12, mu * 0.3);
      kkt_fresh = false;
    } else {
      // The Gauss-Newton model failed to produce progress; the projected
      // gradient arc always admits descent away from stationarity, so try it
      // before steepening the damping. Preconditioning by the squared box
      // scale and capping the first trial at one scaled unit keeps the
      // backtracking range useful when gradient magnitudes blow up.
      mu = std::max(mu * 10.0, 1e-8);
      Eigen::VectorXd pg(n);
      double gs_max = 0.0;
      for (int i = 0; i < n; ++i) {
        pg[i] = -uscale[i] * uscale[i] * grad[i];
        gs_max = std::max(gs_max, uscale[i] * std::abs(grad[i]));
      }
      pg /= std::max(1.0, gs_max);
      if (line_search(pg)) {
        sol.merit_history.push_back(cost);
        kkt_fresh = false;
      } else if (mu > 1e10) {
        break;  // no descent available: treat as stationary
      }
    }
  }

  if (!kkt_fresh) {
    try {
      detail::condense(problem, states, inputs, options.fd_step, grad, hess);
      sol.kkt_residual = (u - detail::clamp_box(u - grad, lo, hi)).lpNorm<Eigen::Infinity>();
      if (sol.kkt_residual < options.kkt_tolerance) sol.converged = true;
    } catch (const std::exception&) {
      // keep the last known residual
    }
  }

  sol.inputs = std::move(inputs);
  sol.states = std::move(states);
  sol.cost = cost;
  sol.max_defect = 0.0;
  try {
    for (int k = 0; k < problem.horizon; ++k) {
      const double d =
          (sol.states[k + 1] - problem.step(sol.states[k], sol.inputs[k])).lpNorm<Eigen::Infinity>();
      sol.max_defect = std::max(sol.max_defect, d);
    }
  } catch (const std::exception&) {
    sol.max_defect = std::numeric_limits<double>::infinity();
  }
  return sol;
}

}  // namespace trq
