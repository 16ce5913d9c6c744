#pragma once

#include "nchhs/grid.hpp"

#include <complex>
#include <memory>

namespace nchhs {

enum class KernelFamily { newtonian2d, gaussian };

/// Interaction kernel description. newtonian2d is J(x) = -strength * ln|x|;
/// gaussian is J(x) = strength * exp(-|x|^2 / (2 width^2)).
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double strength = 1.0;
    double width = 0.1; // gaussian only

    void validate() const;
};

enum class ConvPath { fast, direct };

/// Precomputed discrete convolution operator for J and grad J over the domain.
/// Tables hold cell averages of the kernel on the offset lattice; convolution
/// integrates strictly over the domain (zero contribution from outside) in
/// neumann mode, and wraps (offset folding) in periodic mode. Immutable after
/// build and shareable across threads.
class KernelOperator {
public:
    static KernelOperator build(const KernelSpec& spec, const Grid& grid);

    const Grid& grid() const { return grid_; }
    const KernelSpec& spec() const { return spec_; }
    double a_const() const { return a_; } // sup_x int |J(x-y)| dy, discrete
    double b_const() const { return b_; } // sup_x int |grad J(x-y)| dy, discrete

    // offset tables, shape (2nx-1, 2ny-1), index (dx+nx-1, dy+ny-1)
    const Array2d& table_j() const { return tj_; }
    const Array2d& table_gx() const { return tgx_; }
    const Array2d& table_gy() const { return tgy_; }

    /// J * f over the domain.
    ScalarField convolve(const ScalarField& f, ConvPath path = ConvPath::fast) const;
    /// (grad J) * f, cell-centered components.
    VectorField convolve_grad(const ScalarField& f, ConvPath path = ConvPath::fast) const;

    struct ConvPair {
        ScalarField j;
        VectorField grad;
    };
    /// J * f and (grad J) * f sharing one forward transform.
    ConvPair convolve_both(const ScalarField& f) const;

private:
    Grid grid_;
    KernelSpec spec_;
    Array2d tj_, tgx_, tgy_;
    double a_ = 0.0, b_ = 0.0;

    // periodic-mode folded tables, shape (nx, ny)
    Array2d fj_, fgx_, fgy_;

    struct Spectra; // padded kernel FFTs
    std::shared_ptr<const Spectra> spectra_;

    Array2d apply_direct(const Array2d& f, const Array2d& table, const Array2d& folded) const;
};

// free-function aliases
KernelOperator build_kernel_operator(const KernelSpec& spec, const Grid& grid);
ScalarField convolve(const KernelOperator& k, const ScalarField& f);
VectorField convolve_grad(const KernelOperator& k, const ScalarField& f);

} // namespace nchhs
