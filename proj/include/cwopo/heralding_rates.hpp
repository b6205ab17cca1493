#pragma once

#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/opo_model.hpp"

namespace cwopo {

/// Unwindowed heralding rate, 2 e^2 / (1 - 4 e^2) * eta_t, in units of gamma.
/// Warns when the mean click-box occupation is not small.
double click_rate(const OpoParams& params);

/// Probability of a click in mode 0 together with vacuum outcomes in every
/// other mode of a trigger-only covariance (click first, boxes in time
/// order). Evaluated from the determinant formula in log space so that
/// hundreds of boxes neither overflow nor underflow.
///
/// The formula needs identical x and p blocks with no x-p coupling; this is
/// checked and std::invalid_argument is thrown otherwise. A V_x that cannot be
/// factorized throws UnphysicalCovariance.
double vac_click_probability(const Cov& trigger_cov);

double vac_click_probability(const OpoParams& params, const WindowSpec& window, const ClickMode& click);

/// P_vac,click / dt_c.
double production_rate_windowed(const OpoParams& params, const WindowSpec& window, const ClickMode& click);

}  // namespace cwopo
