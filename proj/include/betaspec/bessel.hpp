#pragma once

#include <span>
#include <vector>

namespace betaspec {

//! Spherical Bessel functions j_0(x) .. j_{l_max}(x) for x >= 0.
//!
//! Uses upward recurrence where it is stable (x > l_max) and Miller's
//! downward recurrence otherwise, normalized through the sum rule
//! sum_l (2l+1) j_l(x)^2 = 1.
std::vector<double> spherical_bessel_all(int l_max, double x);

//! Fills out[l] = j_l(x) for l = 0..out.size()-1.
void spherical_bessel_all(double x, std::span<double> out);

double spherical_bessel(int l, double x);

}  // namespace betaspec
