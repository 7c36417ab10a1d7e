#pragma once

#include "sabrdnn/params.hpp"

namespace sabrdnn {

struct HaganTerms {
    double z = 0.0;
    double E = 1.0;
    double Y = 0.0;
    double z_over_y = 1.0;
    double theta = 0.0;
    double alpha_bar = 0.0;
    double delta0 = 0.0;
    bool atm = false;
};

// Intermediate scalars of the shifted-SABR normal-vol expansion. fwd and strike are shifted.
HaganTerms hagan_terms(double t, double T, double fwd, double strike, const SabrParams& p);

double hagan_normal_vol(double t, double T, double fwd, double strike, const SabrParams& p);
double hagan_lognormal_vol(double t, double T, double fwd, double strike, const SabrParams& p);

// Convenience: smile vol at unshifted strike K for the forward and shift stored in p.
double hagan_smile_vol(double T, double K, const SabrParams& p);

}  // namespace sabrdnn
