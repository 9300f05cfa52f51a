"""Periodic-grid tensor calculus on the unit 3-torus.

Fields live on a uniform N x N x N grid with spacing h = 1/N; axis a of the
array is coordinate x_a, so u[i, j, k] samples u(i*h, j*h, k*h).  All first
derivatives use the 4th-order central stencil, all index arithmetic is
periodic.  The same kernels serve both the plain-numpy public API and the
differentiable energy core: every kernel takes an array namespace ``xp``
(numpy by default, jax.numpy inside traced code) and touches nothing but
``xp`` functions.

Conventions:
  metric / symmetric 2-tensor : shape (N,N,N,3,3), exactly symmetric
  vector field (contravariant): shape (N,N,N,3)
  spinor field                : shape (N,N,N,2) complex
  divergence  (delta_g h)^#   : -g^{ik} (nabla_i h)_{kj}, raised with g^{-1}
  killing operator            : delta*_g X^b = (nabla_i X^b_j + nabla_j X^b_i)/2
"""

from dataclasses import dataclass

import numpy as np


class DefinitenessError(ValueError):
    """A metric lost positive definiteness at some node."""

    def __init__(self, node, detail=""):
        self.node = tuple(int(i) for i in node)
        msg = f"metric not positive definite at node {self.node}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0,1)^3 with n nodes per axis."""

    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"grid needs n >= 4, got {self.n}")

    @property
    def spacing(self):
        return 1.0 / self.n

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    def coordinates(self):
        """Node coordinates, three (n,n,n) arrays (x0, x1, x2)."""
        ax = np.arange(self.n) * self.spacing
        return np.meshgrid(ax, ax, ax, indexing="ij")

    def wavenumbers(self):
        """Integer frequency vectors on the FFT layout, three (n,n,n) arrays."""
        k = np.fft.fftfreq(self.n, d=self.spacing)
        return np.meshgrid(k, k, k, indexing="ij")


# ---------------------------------------------------------------------------
# stencils

def d4(u, axis, spacing, xp=np):
    """4th-order central periodic first derivative along a grid axis."""
    r = xp.roll
    return (8.0 * (r(u, -1, axis) - r(u, 1, axis))
            - (r(u, -2, axis) - r(u, 2, axis))) / (12.0 * spacing)


def d4_symbol(k, spacing):
    """Fourier multiplier of d4 on mode exp(2 pi i k x): returns mu with
    d4 e^{2 pi i k x} = i mu e^{2 pi i k x}."""
    th = 2.0 * np.pi * np.asarray(k, dtype=float) * spacing
    return (8.0 * np.sin(th) - np.sin(2.0 * th)) / (6.0 * spacing)


def grad4(u, spacing, xp=np):
    """All three d4 derivatives, stacked on a new leading -? no: trailing axis
    after the grid axes: result[..., m] = d_m u with u of shape (N,N,N)."""
    return xp.stack([d4(u, a, spacing, xp=xp) for a in range(3)], axis=-1)


# ---------------------------------------------------------------------------
# 3x3 closed-form linear algebra (cofactor based; AD-friendly, no LAPACK)

def det3(a, xp=np):
    return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))


def inv3(a, xp=np):
    c00 = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
    c01 = a[..., 1, 2] * a[..., 2, 0] - a[..., 1, 0] * a[..., 2, 2]
    c02 = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
    c10 = a[..., 0, 2] * a[..., 2, 1] - a[..., 0, 1] * a[..., 2, 2]
    c11 = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
    c12 = a[..., 0, 1] * a[..., 2, 0] - a[..., 0, 0] * a[..., 2, 1]
    c20 = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
    c21 = a[..., 0, 2] * a[..., 1, 0] - a[..., 0, 0] * a[..., 1, 2]
    c22 = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    det = a[..., 0, 0] * c00 + a[..., 0, 1] * c01 + a[..., 0, 2] * c02
    rows = [xp.stack([c00, c10, c20], axis=-1),
            xp.stack([c01, c11, c21], axis=-1),
            xp.stack([c02, c12, c22], axis=-1)]
    return xp.stack(rows, axis=-2) / det[..., None, None]


# ---------------------------------------------------------------------------
# validation

def validate_metric(g, where="metric"):
    """Check exact symmetry and positive definiteness (Sylvester minors).

    Raises DefinitenessError naming the first offending node.
    """
    g = np.asarray(g)
    if g.shape[-2:] != (3, 3) or g.ndim != 5:
        raise ValueError(f"{where}: expected shape (N,N,N,3,3), got {g.shape}")
    asym = np.abs(g - np.swapaxes(g, -1, -2)).max()
    if asym != 0.0:
        raise ValueError(f"{where}: not exactly symmetric (max deviation {asym:g})")
    m1 = g[..., 0, 0]
    m2 = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    m3 = det3(g)
    bad = (m1 <= 0) | (m2 <= 0) | (m3 <= 0) | ~np.isfinite(m3)
    if bad.any():
        node = np.argwhere(bad)[0]
        raise DefinitenessError(node, detail=where)


def symmetrize(h, xp=np):
    return 0.5 * (h + xp.swapaxes(h, -1, -2))


# ---------------------------------------------------------------------------
# tensor calculus

def christoffel_kernel(g, spacing, xp=np):
    """Gamma^k_{ij} = g^{kl}(d_i g_{jl} + d_j g_{il} - d_l g_{ij})/2."""
    ginv = inv3(g, xp=xp)
    dg = xp.stack([d4(g, a, spacing, xp=xp) for a in range(3)], axis=-3)
    # dg[..., a, b, c] = d_a g_{bc}
    tmp = dg + xp.swapaxes(dg, -3, -2) - xp.swapaxes(dg, -3, -1)
    # tmp[..., i, j, l] = d_i g_{jl} + d_j g_{il} - d_l g_{ij}
    return 0.5 * xp.einsum("...kl,...ijl->...kij", ginv, tmp)


def christoffel(g):
    """Christoffel symbols of g; result[..., k, i, j] = Gamma^k_{ij}."""
    g = np.asarray(g, dtype=float)
    validate_metric(g)
    grid = Grid(g.shape[0])
    return np.asarray(christoffel_kernel(g, grid.spacing))


def covariant_derivative_sym2(g, h, spacing, gamma=None, xp=np):
    """(nabla_a h)_{ij} for a symmetric 2-tensor; result[..., a, i, j]."""
    if gamma is None:
        gamma = christoffel_kernel(g, spacing, xp=xp)
    dh = xp.stack([d4(h, a, spacing, xp=xp) for a in range(3)], axis=-3)
    corr1 = xp.einsum("...lai,...lj->...aij", gamma, h)
    corr2 = xp.einsum("...laj,...il->...aij", gamma, h)
    return dh - corr1 - corr2


def divergence_kernel(g, h, spacing, gamma=None, xp=np):
    ginv = inv3(g, xp=xp)
    nh = covariant_derivative_sym2(g, h, spacing, gamma=gamma, xp=xp)
    low = -xp.einsum("...ik,...ikj->...j", ginv, nh)
    return xp.einsum("...jm,...j->...m", ginv, low)


def divergence(g, h):
    """(delta_g h)^#, the raised divergence -g^{ik}(nabla_i h)_{kj}."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    validate_metric(g)
    grid = Grid(g.shape[0])
    return np.asarray(divergence_kernel(g, h, grid.spacing))


def killing_kernel(g, x_vec, spacing, gamma=None, xp=np):
    if gamma is None:
        gamma = christoffel_kernel(g, spacing, xp=xp)
    x_low = xp.einsum("...ij,...j->...i", g, x_vec)
    dx = xp.stack([d4(x_low, a, spacing, xp=xp) for a in range(3)], axis=-2)
    # dx[..., a, i] = d_a X^b_i ; nabla_a X_i = d_a X_i - Gamma^l_{ai} X_l
    nx = dx - xp.einsum("...lai,...l->...ai", gamma, x_low)
    return 0.5 * (nx + xp.swapaxes(nx, -1, -2))


def killing_operator(g, x_vec):
    """delta*_g X^b = (L_X g)/2, the symmetrized covariant derivative of X^b."""
    g = np.asarray(g, dtype=float)
    x_vec = np.asarray(x_vec, dtype=float)
    validate_metric(g)
    grid = Grid(g.shape[0])
    return np.asarray(killing_kernel(g, x_vec, grid.spacing))


def lie_derivative_metric(g, x_vec):
    """L_X g = 2 delta*_g X^b."""
    return 2.0 * killing_operator(g, x_vec)


def volume_element_kernel(g, xp=np):
    return xp.sqrt(det3(g, xp=xp))


def volume_element(g):
    """Pointwise volume density sqrt(det g)."""
    g = np.asarray(g, dtype=float)
    validate_metric(g)
    return np.asarray(volume_element_kernel(g))


def total_volume(g):
    """h^3 * sum of sqrt(det g) over nodes."""
    g = np.asarray(g, dtype=float)
    validate_metric(g)
    grid = Grid(g.shape[0])
    return float(np.sum(volume_element_kernel(g)) * grid.spacing**3)


# ---------------------------------------------------------------------------
# inner products and norms

def l2_inner_kernel(g, ha, pa, hb, pb, spacing, xp=np):
    """Weighted L2 pairing of tangent sections (ha, pa), (hb, pb).

    Tensor slots contracted with g^{-1} (x) g^{-1}, spinor slot is the real
    part of the Hermitian product; both weighted by vol_g.  Spinor arrays are
    the real/imag split of shape (..., 2, 2) with last axis (re, im).
    """
    ginv = inv3(g, xp=xp)
    vol = volume_element_kernel(g, xp=xp)
    tens = xp.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, ha, hb)
    spin = xp.sum(pa * pb, axis=(-1, -2))
    return xp.sum((tens + spin) * vol) * spacing**3


def _split_ri(psi, xp=np):
    psi = xp.asarray(psi)
    return xp.stack([xp.real(psi), xp.imag(psi)], axis=-1)


def l2_inner(g, a, b):
    """L2 inner product of two tangent sections over the metric g.

    ``a`` and ``b`` are pairs (h, psi) of a symmetric 2-tensor field and a
    complex spinor field; either slot may be None (treated as zero).
    """
    g = np.asarray(g, dtype=float)
    validate_metric(g)
    grid = Grid(g.shape[0])
    n = grid.n
    zero_t = np.zeros((n, n, n, 3, 3))
    zero_s = np.zeros((n, n, n, 2), dtype=complex)
    ha, pa = a
    hb, pb = b
    ha = zero_t if ha is None else np.asarray(ha, dtype=float)
    hb = zero_t if hb is None else np.asarray(hb, dtype=float)
    pa = zero_s if pa is None else np.asarray(pa, dtype=complex)
    pb = zero_s if pb is None else np.asarray(pb, dtype=complex)
    return float(l2_inner_kernel(g, ha, _split_ri(pa), hb, _split_ri(pb),
                                 grid.spacing))


def l2_norm(g, a):
    return float(np.sqrt(max(l2_inner(g, a, a), 0.0)))


def l2_inner_vector_kernel(g, x_vec, y_vec, spacing, xp=np):
    vol = volume_element_kernel(g, xp=xp)
    return xp.sum(xp.einsum("...ij,...i,...j->...", g, x_vec, y_vec) * vol) * spacing**3


def l2_inner_vector(g, x_vec, y_vec):
    """Weighted L2 pairing of vector fields, integral of g(X, Y) vol_g."""
    g = np.asarray(g, dtype=float)
    validate_metric(g)
    grid = Grid(g.shape[0])
    return float(l2_inner_vector_kernel(g, np.asarray(x_vec, dtype=float),
                                        np.asarray(y_vec, dtype=float), grid.spacing))


def sobolev_norm(u, s):
    """Spectral H^s norm with the Bessel multiplier (1 + |2 pi k|^2)^s.

    Normalized so that s = 0 reproduces the flat L2 norm sqrt(h^3 sum |u|^2);
    a single mode exp(2 pi i <k,x>) has norm (1 + 4 pi^2 |k|^2)^{s/2}.
    Component axes beyond the three grid axes are summed.
    """
    u = np.asarray(u)
    n = u.shape[0]
    uhat = np.fft.fftn(u, axes=(0, 1, 2)) / n**3
    kx, ky, kz = Grid(n).wavenumbers()
    mult = (1.0 + 4.0 * np.pi**2 * (kx**2 + ky**2 + kz**2)) ** float(s)
    power = np.abs(uhat) ** 2
    if power.ndim > 3:
        power = power.sum(axis=tuple(range(3, power.ndim)))
    return float(np.sqrt(np.sum(mult * power)))


def tangent_sobolev_norm(t_section, s):
    """H^s norm of a tangent section: tensor and spinor components summed."""
    h, psi = t_section
    total = 0.0
    if h is not None:
        total += sobolev_norm(h, s) ** 2
    if psi is not None:
        total += sobolev_norm(psi, s) ** 2
    return float(np.sqrt(total))


def translate(u, shift):
    """Cyclically shift a field by whole nodes; shift[a] moves data +shift
    nodes along axis a (the field value at x moves to x + shift*h)."""
    u = np.asarray(u)
    for a, s in enumerate(shift):
        u = np.roll(u, int(s), axis=a)
    return u


def flat_metric(n):
    g = np.zeros((n, n, n, 3, 3))
    g[..., 0, 0] = g[..., 1, 1] = g[..., 2, 2] = 1.0
    return g
