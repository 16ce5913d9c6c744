#include "nchhs/kernel.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nchhs {

namespace {

// ---- newtonian closed forms -------------------------------------------------
//
// L(x,y) with d^2 L / dx dy = ln(x^2 + y^2); vanishing limits on the axes make
// the corner-difference rule valid across the logarithmic singularity.
double log_antideriv(double x, double y) {
    if (x == 0.0 || y == 0.0) return 0.0;
    const double r2 = x * x + y * y;
    return x * y * (std::log(r2) - 3.0) + x * x * std::atan(y / x) + y * y * std::atan(x / y);
}

// integral of ln(x^2+y^2) over [a,b] x [c,d]
double integral_log_r2(double a, double b, double c, double d) {
    return log_antideriv(b, d) - log_antideriv(a, d) - log_antideriv(b, c) + log_antideriv(a, c);
}

// antiderivative in y of ln(t^2 + y^2)
double log_line_antideriv(double y, double t) {
    if (t == 0.0) return y == 0.0 ? 0.0 : 2.0 * (y * std::log(std::abs(y)) - y);
    return y * std::log(t * t + y * y) - 2.0 * y + 2.0 * t * std::atan(y / t);
}

// integral of x / (x^2 + y^2) over [a,b] x [c,d]
double integral_x_over_r2(double a, double b, double c, double d) {
    return 0.5 * (log_line_antideriv(d, b) - log_line_antideriv(c, b) -
                  log_line_antideriv(d, a) + log_line_antideriv(c, a));
}

struct CellValues {
    double j, gx, gy;
};

// 2x2 tensor Gauss cell average of (J, dJ/dx, dJ/dy)
template <class JF, class GXF, class GYF>
CellValues gauss2x2(double cx, double cy, double hx, double hy, JF&& jf, GXF&& gxf, GYF&& gyf) {
    const double ox = 0.5 * hx / std::sqrt(3.0), oy = 0.5 * hy / std::sqrt(3.0);
    CellValues out{0.0, 0.0, 0.0};
    for (int sx = -1; sx <= 1; sx += 2)
        for (int sy = -1; sy <= 1; sy += 2) {
            const double x = cx + sx * ox, y = cy + sy * oy;
            out.j += jf(x, y);
            out.gx += gxf(x, y);
            out.gy += gyf(x, y);
        }
    out.j *= 0.25;
    out.gx *= 0.25;
    out.gy *= 0.25;
    return out;
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

using Cplx = std::complex<double>;
using MatC = Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic>;

void fft2_inplace(MatC& m, bool inverse) {
    thread_local Eigen::FFT<double> fft; // plan cache persists across calls
    thread_local std::vector<Cplx> buf_in, buf_out;
    const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
    buf_out.resize(rows);
    for (int j = 0; j < cols; ++j) { // columns are contiguous
        Cplx* col = m.col(j).data();
        if (inverse)
            fft.inv(buf_out.data(), col, rows);
        else
            fft.fwd(buf_out.data(), col, rows);
        std::copy(buf_out.begin(), buf_out.end(), col);
    }
    buf_in.resize(cols);
    buf_out.resize(cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) buf_in[j] = m(i, j);
        if (inverse)
            fft.inv(buf_out.data(), buf_in.data(), cols);
        else
            fft.fwd(buf_out.data(), buf_in.data(), cols);
        for (int j = 0; j < cols; ++j) m(i, j) = buf_out[j];
    }
}

} // namespace

struct KernelOperator::Spectra {
    int px = 0, py = 0; // transform size (padded in neumann mode, n in periodic)
    MatC sj, sgx, sgy;
};

void KernelSpec::validate() const {
    if (!(strength > 0.0)) throw std::invalid_argument("kernel: strength must be positive");
    if (family == KernelFamily::gaussian && !(width > 0.0))
        throw std::invalid_argument("kernel: width must be positive");
}

KernelOperator KernelOperator::build(const KernelSpec& spec, const Grid& grid) {
    spec.validate();
    KernelOperator k;
    k.grid_ = grid;
    k.spec_ = spec;

    const int nx = grid.nx, ny = grid.ny;
    const double hx = grid.hx, hy = grid.hy;
    const int tx = 2 * nx - 1, ty = 2 * ny - 1;
    k.tj_.setZero(tx, ty);
    k.tgx_.setZero(tx, ty);
    k.tgy_.setZero(tx, ty);

    const double inv_area = 1.0 / (hx * hy);

    auto fill_cell = [&](int dx, int dy) -> CellValues {
        const double cx = dx * hx, cy = dy * hy;
        const double a = cx - 0.5 * hx, b = cx + 0.5 * hx;
        const double c = cy - 0.5 * hy, d = cy + 0.5 * hy;
        if (spec.family == KernelFamily::newtonian2d) {
            const double j2 = spec.strength;
            const bool near = std::abs(dx) <= 2 && std::abs(dy) <= 2;
            if (near) {
                // exact analytic cell integrals (valid across the singularity)
                CellValues v;
                v.j = -0.5 * j2 * integral_log_r2(a, b, c, d) * inv_area;
                v.gx = -j2 * integral_x_over_r2(a, b, c, d) * inv_area;
                v.gy = -j2 * integral_x_over_r2(c, d, a, b) * inv_area;
                return v;
            }
            auto jf = [&](double x, double y) { return -0.5 * j2 * std::log(x * x + y * y); };
            auto gxf = [&](double x, double y) { return -j2 * x / (x * x + y * y); };
            auto gyf = [&](double x, double y) { return -j2 * y / (x * x + y * y); };
            return gauss2x2(cx, cy, hx, hy, jf, gxf, gyf);
        }
        const double amp = spec.strength, w2 = spec.width * spec.width;
        auto jf = [&](double x, double y) { return amp * std::exp(-(x * x + y * y) / (2.0 * w2)); };
        auto gxf = [&](double x, double y) { return -x / w2 * jf(x, y); };
        auto gyf = [&](double x, double y) { return -y / w2 * jf(x, y); };
        return gauss2x2(cx, cy, hx, hy, jf, gxf, gyf);
    };

    // build the half lattice and mirror: J even, grad J odd, exactly
    for (int dy = -(ny - 1); dy <= ny - 1; ++dy)
        for (int dx = -(nx - 1); dx <= nx - 1; ++dx) {
            if (dx < 0 || (dx == 0 && dy < 0)) continue;
            const CellValues v = fill_cell(dx, dy);
            k.tj_(dx + nx - 1, dy + ny - 1) = v.j;
            k.tgx_(dx + nx - 1, dy + ny - 1) = v.gx;
            k.tgy_(dx + nx - 1, dy + ny - 1) = v.gy;
            if (dx != 0 || dy != 0) {
                k.tj_(-dx + nx - 1, -dy + ny - 1) = v.j;
                k.tgx_(-dx + nx - 1, -dy + ny - 1) = -v.gx;
                k.tgy_(-dx + nx - 1, -dy + ny - 1) = -v.gy;
            }
        }

    const double area = hx * hy;
    if (grid.periodic()) {
        // fold offsets modulo the torus
        k.fj_.setZero(nx, ny);
        k.fgx_.setZero(nx, ny);
        k.fgy_.setZero(nx, ny);
        for (int dy = -(ny - 1); dy <= ny - 1; ++dy)
            for (int dx = -(nx - 1); dx <= nx - 1; ++dx) {
                const int rx = (dx % nx + nx) % nx, ry = (dy % ny + ny) % ny;
                k.fj_(rx, ry) += k.tj_(dx + nx - 1, dy + ny - 1);
                k.fgx_(rx, ry) += k.tgx_(dx + nx - 1, dy + ny - 1);
                k.fgy_(rx, ry) += k.tgy_(dx + nx - 1, dy + ny - 1);
            }
        double asum = 0.0, bsum = 0.0;
        for (int ry = 0; ry < ny; ++ry)
            for (int rx = 0; rx < nx; ++rx) {
                asum += std::abs(k.fj_(rx, ry));
                bsum += std::hypot(k.fgx_(rx, ry), k.fgy_(rx, ry));
            }
        k.a_ = asum * area;
        k.b_ = bsum * area;
    } else {
        // sliding-window row sums via 2D prefix sums over the offset tables
        Array2d pj(tx + 1, ty + 1), pg(tx + 1, ty + 1);
        pj.setZero();
        pg.setZero();
        for (int jv = 0; jv < ty; ++jv)
            for (int iv = 0; iv < tx; ++iv) {
                pj(iv + 1, jv + 1) = std::abs(k.tj_(iv, jv)) + pj(iv, jv + 1) + pj(iv + 1, jv) - pj(iv, jv);
                pg(iv + 1, jv + 1) = std::hypot(k.tgx_(iv, jv), k.tgy_(iv, jv)) + pg(iv, jv + 1) +
                                     pg(iv + 1, jv) - pg(iv, jv);
            }
        auto window = [&](const Array2d& p, int ix, int iy) {
            return p(ix + nx, iy + ny) - p(ix, iy + ny) - p(ix + nx, iy) + p(ix, iy);
        };
        double amax = 0.0, bmax = 0.0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                amax = std::max(amax, window(pj, ix, iy));
                bmax = std::max(bmax, window(pg, ix, iy));
            }
        k.a_ = amax * area;
        k.b_ = bmax * area;
    }

    // kernel spectra for the fast path
    auto spectra = std::make_shared<Spectra>();
    if (grid.periodic()) {
        spectra->px = nx;
        spectra->py = ny;
        auto load = [&](const Array2d& t) {
            MatC m = MatC::Zero(nx, ny);
            for (int jv = 0; jv < ny; ++jv)
                for (int iv = 0; iv < nx; ++iv) m(iv, jv) = t(iv, jv);
            fft2_inplace(m, false);
            return m;
        };
        spectra->sj = load(k.fj_);
        spectra->sgx = load(k.fgx_);
        spectra->sgy = load(k.fgy_);
    } else {
        spectra->px = next_pow2(2 * nx);
        spectra->py = next_pow2(2 * ny);
        auto load = [&](const Array2d& t) {
            MatC m = MatC::Zero(spectra->px, spectra->py);
            for (int dy = -(ny - 1); dy <= ny - 1; ++dy)
                for (int dx = -(nx - 1); dx <= nx - 1; ++dx) {
                    const int rx = (dx % spectra->px + spectra->px) % spectra->px;
                    const int ry = (dy % spectra->py + spectra->py) % spectra->py;
                    m(rx, ry) = t(dx + nx - 1, dy + ny - 1);
                }
            fft2_inplace(m, false);
            return m;
        };
        spectra->sj = load(k.tj_);
        spectra->sgx = load(k.tgx_);
        spectra->sgy = load(k.tgy_);
    }
    k.spectra_ = spectra;
    return k;
}

Array2d KernelOperator::apply_direct(const Array2d& f, const Array2d& table,
                                     const Array2d& folded) const {
    const int nx = grid_.nx, ny = grid_.ny;
    Array2d out = Array2d::Zero(nx, ny);
    if (grid_.periodic()) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                double acc = 0.0;
                for (int jy = 0; jy < ny; ++jy)
                    for (int jx = 0; jx < nx; ++jx) {
                        const int rx = ((ix - jx) % nx + nx) % nx;
                        const int ry = ((iy - jy) % ny + ny) % ny;
                        acc += folded(rx, ry) * f(jx, jy);
                    }
                out(ix, iy) = acc;
            }
    } else {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                double acc = 0.0;
                for (int jy = 0; jy < ny; ++jy)
                    for (int jx = 0; jx < nx; ++jx)
                        acc += table(ix - jx + nx - 1, iy - jy + ny - 1) * f(jx, jy);
                out(ix, iy) = acc;
            }
    }
    return out * grid_.cell_area();
}

namespace {

// forward transform of f zero-padded to (px, py)
MatC forward_padded(const Array2d& f, int px, int py) {
    MatC m = MatC::Zero(px, py);
    for (int j = 0; j < f.cols(); ++j)
        for (int i = 0; i < f.rows(); ++i) m(i, j) = f(i, j);
    fft2_inplace(m, false);
    return m;
}

Array2d extract_real(MatC m, int nx, int ny) {
    fft2_inplace(m, true);
    Array2d out(nx, ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) out(i, j) = m(i, j).real();
    return out;
}

} // namespace

ScalarField KernelOperator::convolve(const ScalarField& f, ConvPath path) const {
    require_same_grid(f.grid, grid_, "convolve");
    if (path == ConvPath::direct)
        return {grid_, apply_direct(f.v, tj_, fj_)};
    const auto& s = *spectra_;
    MatC fs = forward_padded(f.v, s.px, s.py);
    MatC prod = fs.cwiseProduct(s.sj);
    return {grid_, extract_real(std::move(prod), grid_.nx, grid_.ny) * grid_.cell_area()};
}

VectorField KernelOperator::convolve_grad(const ScalarField& f, ConvPath path) const {
    require_same_grid(f.grid, grid_, "convolve_grad");
    VectorField out = VectorField::zeros_cc(grid_);
    if (path == ConvPath::direct) {
        out.x = apply_direct(f.v, tgx_, fgx_);
        out.y = apply_direct(f.v, tgy_, fgy_);
        return out;
    }
    const auto& s = *spectra_;
    MatC fs = forward_padded(f.v, s.px, s.py);
    out.x = extract_real(fs.cwiseProduct(s.sgx), grid_.nx, grid_.ny) * grid_.cell_area();
    out.y = extract_real(fs.cwiseProduct(s.sgy), grid_.nx, grid_.ny) * grid_.cell_area();
    return out;
}

KernelOperator::ConvPair KernelOperator::convolve_both(const ScalarField& f) const {
    require_same_grid(f.grid, grid_, "convolve_both");
    const auto& s = *spectra_;
    const MatC fs = forward_padded(f.v, s.px, s.py);
    ConvPair out;
    out.j = ScalarField{grid_,
                        extract_real(fs.cwiseProduct(s.sj), grid_.nx, grid_.ny) * grid_.cell_area()};
    out.grad = VectorField::zeros_cc(grid_);
    out.grad.x = extract_real(fs.cwiseProduct(s.sgx), grid_.nx, grid_.ny) * grid_.cell_area();
    out.grad.y = extract_real(fs.cwiseProduct(s.sgy), grid_.nx, grid_.ny) * grid_.cell_area();
    return out;
}

KernelOperator build_kernel_operator(const KernelSpec& spec, const Grid& grid) {
    return KernelOperator::build(spec, grid);
}

ScalarField convolve(const KernelOperator& k, const ScalarField& f) { return k.convolve(f); }

VectorField convolve_grad(const KernelOperator& k, const ScalarField& f) {
    return k.convolve_grad(f);
}

} // namespace nchhs
