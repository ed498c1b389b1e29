#pragma once

#include <vector>

#include "mkteq/market.hpp"

namespace mkteq::frictionless {

// Competitive equilibrium returns nu_hat = Sigma (zeta - psi) / delta.
PathGrid competitive_returns(const Market& market, const Investors& investors,
                             const Realization& real);

// Price-taking demands phi_hat_m = delta_m Sigma^{-1} nu - zeta_m.
std::vector<PathGrid> competitive_demands(const Market& market, const Investors& investors,
                                          const Realization& real, const PathGrid& nu);

// Returns as a function of investor n's demand when everyone else stays a
// price taker: nu_n(phi) = Sigma (zeta_{-n} - psi - phi) / delta_{-n}.
PathGrid price_impact_returns(const Market& market, const Investors& investors,
                              const Realization& real, int n, const PathGrid& phi);

// Unique maximizer of the impact-adjusted objective:
// (lambda_n (zeta_{-n} - psi) - lambda_{-n} zeta_n) / (lambda_n + 1).
PathGrid best_response_demand(const Market& market, const Investors& investors,
                              const Realization& real, int n);

// Equilibrium returns when only n is strategic; a convex combination of the
// no-n competitive returns and the full competitive returns.
PathGrid best_response_returns(const Market& market, const Investors& investors,
                               const Realization& real, int n);

// zeta_m(phi) = delta_m Sigma^{-1} nu - phi.
PathGrid revealed_exposure(const Market& market, const Investors& investors, const PathGrid& nu,
                           const PathGrid& phi, int m);

// Nash equilibrium returns:
// (Sigma/delta) [(zeta - psi) - sum_m lambda_m zeta_m] / (1 - sum_m lambda_m^2).
PathGrid nash_returns(const Market& market, const Investors& investors, const Realization& real);

// Decoupled Nash demands phi_m = lambda_m delta_{-m} Sigma^{-1} nu - lambda_{-m} zeta_m,
// valid when nu is the Nash returns path.
std::vector<PathGrid> nash_demands(const Market& market, const Investors& investors,
                                   const Realization& real, const PathGrid& nu);

struct LiquidityPremium {
    PathGrid premium;     // nash returns - competitive returns, node-wise
    double identity_gap;  // max gap vs the weighted-demand form of the same premium
};

LiquidityPremium liquidity_premium(const Market& market, const Investors& investors,
                                   const Realization& real);

// Utility surplus of (nu, phi) for investor m relative to the zero strategy:
// trapezoid of e^{-rt} [phi' nu - (1/(2 delta_m)) (phi' Sigma phi + 2 phi' Sigma zeta_m)].
double utility_surplus(const Market& market, const Investors& investors, const Realization& real,
                       int m, const PathGrid& nu, const PathGrid& phi);

// Closed-form limit of the Nash surplus of investor m as its tolerance grows:
// trapezoid of e^{-rt} (1/(4 delta_{-m})) (zeta_{-m} - psi)' Sigma (zeta_{-m} - psi).
double nash_surplus_limit(const Market& market, const Investors& investors,
                          const Realization& real, int m);

EquilibriumResult competitive_equilibrium(const Market& market, const Investors& investors,
                                          const Realization& real);
EquilibriumResult nash_equilibrium(const Market& market, const Investors& investors,
                                   const Realization& real);

}  // namespace mkteq::frictionless
