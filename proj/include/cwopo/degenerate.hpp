#pragma once

#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/mode_functions.hpp"
#include "cwopo/opo_model.hpp"

namespace cwopo {

/// Degenerate OPO whose single output beam is split by a beam splitter of
/// reflectivity R: the transmitted part triggers, the reflected part is the
/// signal.
struct DegenerateParams {
    OpoParams base;
    double R;

    /// Throws std::invalid_argument unless R lies in [0, 1].
    void validate() const;
};

/// (c2 + c3 x^2 + c4 p^2) exp(-c5 x^2 - c6 p^2) / c1.
struct AxialWigner {
    double c1;
    double c2;
    double c3;
    double c4;
    double c5;
    double c6;

    double operator()(double x, double p) const;
    double normalization() const;
    double second_moment_x() const;  ///< int x^2 W
    double second_moment_p() const;
};

/// 4 x 4 covariance of (trigger click, signal). x is anti-squeezed and p
/// squeezed, so V11 != V22 and V33 != V44 in general. Short-box trigger.
Cov build_cov_degenerate(const DegenerateParams& dp, const ModeGrid& f2, const ClickMode& click);

/// Throws NoClickInformation when V11 + V22 - 2 <= 1e-12.
AxialWigner click_condition_degenerate(const Cov& cov4);
double fidelity_degenerate(const Cov& cov4);

}  // namespace cwopo
