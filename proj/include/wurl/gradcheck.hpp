#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wurl/eval.hpp"
#include "wurl/hrl.hpp"
#include "wurl/ot_dual.hpp"
#include "wurl/sac.hpp"

namespace wurl {

struct GradCheckResult {
  std::string name;
  double rel_err = 0.0;
  bool ok = false;
};

namespace detail {

// Max relative error between the analytic gradient and central differences
// over every parameter of one net.
inline double fd_param_check(Vec& params, std::span<const double> analytic,
                             const std::function<double()>& loss, double h = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double keep = params[i];
    params[i] = keep + h;
    double up = loss();
    params[i] = keep - h;
    double dn = loss();
    params[i] = keep;
    double fd = (up - dn) / (2.0 * h);
    double err = std::fabs(fd - analytic[i]) / std::max({1.0, std::fabs(fd), std::fabs(analytic[i])});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace detail

// Central finite-difference checks for every loss the library trains with.
// `sabotage` corrupts the first analytic gradient to prove failures surface.
inline std::vector<GradCheckResult> run_gradient_checks(double tol = 1e-4,
                                                        bool sabotage = false) {
  std::vector<GradCheckResult> out;
  SeedSeq seeds(20240);
  auto report = [&](const std::string& name, double err) {
    out.push_back({name, err, err < tol});
  };

  {  // Plain network backward pass through a quadratic head.
    Rng rng = seeds.at(0).rng(0);
    Mlp net({3, 8, 2}, Head::Tanh, rng);
    Matrix X(5, 3);
    for (double& v : X.a) v = std_normal(rng);
    auto loss = [&] {
      Matrix Y;
      net.forward(X, Y);
      double l = 0.0;
      for (double v : Y.a) l += 0.5 * v * v;
      return l;
    };
    Matrix Y;
    MlpCache cache;
    net.forward(X, Y, &cache);
    Vec g(std::size_t(net.n_params()), 0.0);
    net.backward(cache, Y, g);
    if (sabotage) g[0] += 0.5;
    report("mlp_backward", detail::fd_param_check(net.params(), g, loss));
  }

  for (DualForm form : {DualForm::Tf1, DualForm::Tf2}) {  // Dual objectives.
    DualConfig dc;
    dc.form = form;
    dc.hidden = 8;
    dc.depth = 1;
    dc.beta = 0.3;
    dc.clamp = 0.05;
    Rng rng = seeds.at(1).rng(form == DualForm::Tf1 ? 0 : 1);
    TestFunctionPair tf(3, dc, rng);
    Matrix X(6, 3), Y(6, 3);
    for (double& v : X.a) v = std_normal(rng);
    for (double& v : Y.a) v = 0.4 * std_normal(rng) + 0.6;
    Vec ga(std::size_t(tf.first_net().n_params()), 0.0);
    Vec gb;
    if (form == DualForm::Tf2) gb.resize(std::size_t(tf.second_net().n_params()), 0.0);
    tf.objective_grad(X, Y, &ga, form == DualForm::Tf2 ? &gb : nullptr);
    auto obj = [&] { return tf.objective(X, Y); };
    double err = detail::fd_param_check(tf.first_net().params(), ga, obj);
    if (form == DualForm::Tf2)
      err = std::max(err, detail::fd_param_check(tf.second_net().params(), gb, obj));
    report(form == DualForm::Tf1 ? "tf1_objective" : "tf2_objective", err);
  }

  {  // SAC critic and actor losses.
    SacConfig sc;
    sc.hidden = 8;
    sc.depth = 1;
    SeedSeq agent_seeds = seeds.at(2);
    SacAgent agent(4, 2, {0.1, 0.1}, {1, 1, 1, 1}, sc, agent_seeds);
    Rng rng = seeds.at(3).rng(0);
    const int B = 6;
    Matrix S(B, 4), A(B, 2), eps(B, 2);
    Vec y(B);
    for (double& v : S.a) v = std_normal(rng);
    for (double& v : A.a) v = std::tanh(std_normal(rng));
    for (double& v : eps.a) v = std_normal(rng);
    for (double& v : y) v = std_normal(rng);

    Vec g1(std::size_t(agent.q1().n_params()), 0.0), g2(g1.size(), 0.0);
    agent.critic_loss_grad(S, A, y, &g1, &g2);
    auto closs = [&] { return agent.critic_loss_grad(S, A, y, nullptr, nullptr); };
    double cerr = std::max(detail::fd_param_check(agent.q1().params(), g1, closs),
                           detail::fd_param_check(agent.q2().params(), g2, closs));
    report("sac_critic", cerr);

    Vec ga(std::size_t(agent.actor().n_params()), 0.0);
    agent.actor_loss_grad(S, eps, &ga);
    auto aloss = [&] { return agent.actor_loss_grad(S, eps, nullptr); };
    report("sac_actor", detail::fd_param_check(agent.actor().params(), ga, aloss));
  }

  {  // PPO surrogate and value losses.
    PpoConfig pc;
    pc.hidden = 8;
    pc.depth = 1;
    Rng rng = seeds.at(4).rng(0);
    MetaPolicy mp(4, 3, {1, 1, 1, 1}, pc, seeds.at(4));
    const int B = 8;
    Matrix S(B, 4);
    std::vector<int> acts;
    Vec adv(B), ret(B), logp_old;
    for (double& v : S.a) v = std_normal(rng);
    for (int i = 0; i < B; ++i) {
      acts.push_back(int(uniform_int(rng, 3)));
      adv[std::size_t(i)] = std_normal(rng);
      ret[std::size_t(i)] = std_normal(rng);
    }
    for (int i = 0; i < B; ++i) {
      Vec p = mp.probs({S.row(i), 4});
      logp_old.push_back(std::log(p[std::size_t(acts[std::size_t(i)])]) + 0.05 * std_normal(rng));
    }
    Vec gpi(std::size_t(mp.pi().n_params()), 0.0);
    mp.actor_loss(S, acts, adv, logp_old, &gpi);
    auto ploss = [&] { return mp.actor_loss(S, acts, adv, logp_old, nullptr); };
    report("ppo_actor", detail::fd_param_check(mp.pi().params(), gpi, ploss));

    Vec gv(std::size_t(mp.v().n_params()), 0.0);
    mp.value_loss(S, ret, &gv);
    auto vloss = [&] { return mp.value_loss(S, ret, nullptr); };
    report("ppo_value", detail::fd_param_check(mp.v().params(), gv, vloss));
  }

  {  // Discriminator cross-entropy.
    DiscriminatorConfig dc;
    dc.hidden = 8;
    dc.depth = 1;
    Rng rng = seeds.at(5).rng(0);
    Discriminator disc(3, 3, dc, rng);
    const int B = 9;
    Matrix X(B, 3);
    std::vector<int> labels;
    for (double& v : X.a) v = std_normal(rng);
    for (int i = 0; i < B; ++i) labels.push_back(i % 3);
    Vec g(std::size_t(disc.net().n_params()), 0.0);
    disc.loss_grad(X, labels, &g);
    auto dloss = [&] { return disc.loss_grad(X, labels, nullptr); };
    report("discriminator_ce", detail::fd_param_check(disc.net().params(), g, dloss));
  }

  return out;
}

inline bool all_checks_pass(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results)
    if (!r.ok) return false;
  return !results.empty();
}

}  // namespace wurl
