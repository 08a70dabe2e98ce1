#pragma once

// Central finite-difference gradient oracle shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fnnet/diffcore/graph.hpp"

namespace fnnet::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;        // "param[index]" of the worst entry
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries whose perturbation crossed a kink
};

// Builds a scalar loss on `g` from the parameters (already registered with g.param).
using LossBuilder = std::function<diff::Var(diff::Graph& g, const std::vector<diff::Var>& inputs)>;

struct GradCheckOptions {
  double h = 1e-5;
  // Entry skipped when the one-sided slopes disagree by more than this
  // (relative), which only happens when [x-h, x+h] straddles a kink.
  double kink_tolerance = 1e-2;
  bool detect_kinks = false;
  // Called before every loss evaluation, e.g. to restore mutable state.
  std::function<void()> reset;
};

// Relative error |a-n| / max(|a|, |n|, floor) with a floor that scales with
// the loss magnitude, since finite-difference round-off grows with |f|/h.
inline double relative_error(double analytic, double numeric, double loss_scale) {
  const double floor = 1e-6 * std::max(1.0, std::abs(loss_scale));
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheckResult check_gradients(const std::vector<diff::Parameter*>& params, const LossBuilder& build,
                                       const GradCheckOptions& opt = {}) {
  auto eval = [&]() {
    if (opt.reset) opt.reset();
    diff::Graph g(false);
    std::vector<diff::Var> in;
    for (auto* p : params) in.push_back(g.param(*p));
    return build(g, in).value().item();
  };

  for (auto* p : params) p->zero_grad();
  if (opt.reset) opt.reset();
  double f0 = 0.0;
  {
    diff::Graph g;
    std::vector<diff::Var> in;
    for (auto* p : params) in.push_back(g.param(*p));
    diff::Var loss = build(g, in);
    f0 = loss.value().item();
    g.backward(loss);
  }

  GradCheckResult res;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double x = p->value[i];
      p->value[i] = x + opt.h;
      const double fp = eval();
      p->value[i] = x - opt.h;
      const double fm = eval();
      p->value[i] = x;
      if (opt.detect_kinks) {
        const double f = eval();
        const double right = (fp - f) / opt.h, left = (f - fm) / opt.h;
        const double curvature_scale = std::max({std::abs(right), std::abs(left), 1e-3});
        if (std::abs(right - left) > opt.kink_tolerance * curvature_scale) {
          ++res.skipped;
          continue;
        }
      }
      const double numeric = (fp - fm) / (2.0 * opt.h);
      const double err = relative_error(p->grad[i], numeric, f0);
      ++res.checked;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

// Parameter filled with uniform values in [lo, hi].
inline diff::Parameter random_param(const std::string& name, diff::Shape shape, std::mt19937_64& rng,
                                    double lo = -1.0, double hi = 1.0) {
  diff::Parameter p(name, diff::Tensor(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : p.value.data()) v = u(rng);
  return p;
}

// Moves entries that sit within `margin` of any kink in `kinks` away from it.
inline void avoid_kinks(diff::Parameter& p, const std::vector<double>& kinks, double margin = 1e-3) {
  for (double& v : p.value.data())
    for (double k : kinks)
      if (std::abs(v - k) < margin) v = k + (v >= k ? margin : -margin) * 3.0;
}

}  // namespace fnnet::testing
