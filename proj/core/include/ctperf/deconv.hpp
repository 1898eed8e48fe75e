#pragma once

#include <string>

#include "ctperf/phantom.hpp"
#include "ctperf/types.hpp"

namespace ctperf {

enum class DeconvMethod { ssvd, csvd };

std::string to_string(DeconvMethod method);
DeconvMethod parse_method(const std::string& text);

// Per-voxel impulse-response functions. For csvd the grid is the zero-padded
// one (pad_factor times the acquisition length); for ssvd it equals the
// acquisition grid.
struct IrfMap {
    Volume4<double> data;  // units 1/s, scaled by the cbf/6000 forward factor
    TimeGrid grid;
    DeconvMethod method = DeconvMethod::csvd;
    double lambda_rel = 0.0;  // in [0, 1)
};

// Least-squares solve of AIF (*) irf = TCC per voxel with singular values
// below lambda_rel * sigma_max zeroed (exact zeros are always dropped, so
// lambda_rel = 0 is the Moore-Penrose solution).
//   ssvd: lower-triangular Toeplitz quadrature matrix A(i,j) = aif[i-j]*dt.
//   csvd: block-circulant embedding at pad_factor times the length; the DFT
//         diagonalizes it and |dt * DFT(aif_padded)| are its singular values.
// Negative irf samples are kept; map derivation decides any clamping.
IrfMap deconvolve(const CtpSeries& series, const Curve& aif, DeconvMethod method,
                  double lambda_rel, int pad_factor = 2);

// Zero-extends to factor * n_samples on the same dt.
Curve pad_curve(const Curve& curve, int factor);

// Picks the voxel curve maximizing peak / (first_moment * FWHM), which
// favors tall narrow curves that arrive early. Ties go to the lowest
// linear voxel index. Flat candidates
// are skipped; if every candidate is flat the input has no usable AIF.
Curve select_aif(const CtpSeries& series, const Mask3* candidate_mask = nullptr);

}  // namespace ctperf
