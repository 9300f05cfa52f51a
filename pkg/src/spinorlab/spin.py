"""Clifford algebra, frame transfer and spinor calculus on the torus grid.

Spinors are C^2-valued grid functions stored in the frame attached to the
flat reference metric.  For a general metric g the orthonormal frame is
obtained by the relative square root B = g^{1/2}: the vectors B^{-1} e_i are
g-orthonormal, and all g-dependence of Clifford multiplication and of the
spin connection is carried by B.  With this storage choice the transfer
between spinor bundles over different metrics is the identity on stored
components, which is what makes a single global chart possible.

Sign conventions (fixed here once, used everywhere):
  gamma^i = i * sigma_i   (anti-Hermitian, gamma^i gamma^j + gamma^j gamma^i
                           = -2 delta^{ij} Id)
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    Grid,
    d4,
    inv3,
    christoffel_kernel,
    symmetrize,
    validate_metric,
    flat_metric,
)


class ChartDomainError(ValueError):
    """g + h left the cone of positive definite metrics."""


_PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


@dataclass(frozen=True)
class CliffordModel:
    """The three constant 2x2 Clifford generators."""

    gamma: np.ndarray = field(default_factory=lambda: 1j * _PAULI)

    def relation_residual(self):
        """max |gamma^i gamma^j + gamma^j gamma^i + 2 delta^{ij}| entrywise."""
        g = self.gamma
        acc = 0.0
        for i in range(3):
            for j in range(3):
                anti = g[i] @ g[j] + g[j] @ g[i] + 2.0 * (i == j) * np.eye(2)
                acc = max(acc, np.abs(anti).max())
        return float(acc)

    def hermiticity_residual(self):
        g = self.gamma
        return float(max(np.abs(g[i].conj().T + g[i]).max() for i in range(3)))

    def validate(self):
        r = self.relation_residual()
        if r > 1e-15:
            raise ValueError(f"Clifford relation violated, residual {r:g}")
        h = self.hermiticity_residual()
        if h > 1e-15:
            raise ValueError(f"gamma matrices not anti-Hermitian, residual {h:g}")


CLIFFORD = CliffordModel()

# gamma^i gamma^j products, precomputed: GG[i, j] = gamma^i @ gamma^j
_GG = np.einsum("iab,jbc->ijac", CLIFFORD.gamma, CLIFFORD.gamma)


# ---------------------------------------------------------------------------
# configurations and tangent sections

@dataclass
class Configuration:
    """A pair (metric, unit spinor) on a periodic grid."""

    g: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.phi = np.asarray(self.phi, dtype=complex)

    @property
    def grid(self):
        return Grid(self.g.shape[0])

    def spinor_norm(self):
        return np.sqrt(np.sum(np.abs(self.phi) ** 2, axis=-1))

    def validate(self, unit_tol=1e-12):
        validate_metric(self.g)
        if self.phi.shape != self.g.shape[:3] + (2,):
            raise ValueError(f"spinor shape {self.phi.shape} does not match grid")
        dev = np.abs(self.spinor_norm() - 1.0).max()
        if dev > unit_tol:
            raise ValueError(f"spinor not unit norm, max deviation {dev:g}")

    def copy(self):
        return Configuration(self.g.copy(), self.phi.copy())


@dataclass
class TangentSection:
    """A variation (h, psi) of a configuration, h symmetric."""

    h: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.psi = np.asarray(self.psi, dtype=complex)

    def as_pair(self):
        return (self.h, self.psi)

    def __add__(self, other):
        return TangentSection(self.h + other.h, self.psi + other.psi)

    def __sub__(self, other):
        return TangentSection(self.h - other.h, self.psi - other.psi)

    def __rmul__(self, c):
        return TangentSection(c * self.h, c * self.psi)


def project_spinor_tangent(phi, psi):
    """Pointwise projection of psi onto the real-orthogonal complement of phi."""
    inner = np.sum((np.conj(phi) * psi).real, axis=-1, keepdims=True)
    return psi - inner * phi


# ---------------------------------------------------------------------------
# relative square root (Denman-Beavers; safe to differentiate through,
# unlike eigh whose tangent blows up at coalescing eigenvalues)

def spd_sqrt_kernel(a, iters=10, xp=np):
    """Matrix square root of a batch of SPD 3x3 matrices.

    Scaled Denman-Beavers iteration; quadratic convergence, and exact
    derivatives under automatic differentiation for any eigenvalue spread
    the flows encounter.
    """
    tr = (a[..., 0, 0] + a[..., 1, 1] + a[..., 2, 2]) / 3.0
    c = tr[..., None, None]
    y = a / c
    z = xp.broadcast_to(xp.eye(3), a.shape)
    for _ in range(iters):
        yi = inv3(y, xp=xp)
        zi = inv3(z, xp=xp)
        y, z = 0.5 * (y + zi), 0.5 * (z + yi)
    return y * xp.sqrt(c)


def bg_operators_kernel(g, xp=np):
    """(A, B, B^{-1}) of g relative to the flat reference.

    A is the component matrix of g itself (the reference is delta = Id in
    coordinates); B = A^{1/2} and the transferred frame B^{-1} e_i is exactly
    g-orthonormal.
    """
    b = spd_sqrt_kernel(g, xp=xp)
    b = symmetrize(b, xp=xp)
    return g, b, inv3(b, xp=xp)


def bg_operators(g):
    """Frame-transfer operators (A, B) of g against the flat reference."""
    g = np.asarray(g, dtype=float)
    validate_metric(g)
    a, b, _ = bg_operators_kernel(g)
    return np.asarray(a), np.asarray(b)


# ---------------------------------------------------------------------------
# spin connection and covariant derivative

def _gg_real_imag():
    return np.real(_GG), np.imag(_GG)


_GG_RE, _GG_IM = _gg_real_imag()


def spin_connection_kernel(g, spacing, gamma_sym=None, xp=np):
    """Connection coefficients om[..., k, i, j] = g(nabla_{e~_k} e~_i, e~_j)
    in the transferred orthonormal frame, antisymmetrized in (i, j), plus the
    frame inverse B^{-1} for reuse."""
    if gamma_sym is None:
        gamma_sym = christoffel_kernel(g, spacing, xp=xp)
    _, b, binv = bg_operators_kernel(g, xp=xp)
    # frame vectors: e~_i has coordinate components binv[..., m, i]
    dbinv = xp.stack([d4(binv, a, spacing, xp=xp) for a in range(3)], axis=-3)
    # (nabla_m e~_i)^l = d_m binv[l, i] + Gamma^l_{m p} binv[p, i]
    nabla = dbinv + xp.einsum("...lmp,...pi->...mli", gamma_sym, binv)
    # contract with the frame direction: nabla_{e~_k} e~_i = binv[m, k] nabla_m e~_i
    nk = xp.einsum("...mk,...mli->...kli", binv, nabla)
    # g(v, e~_j) = v^T A binv e_j = v^T B e_j
    om = xp.einsum("...kli,...lj->...kij", nk, b)
    return 0.5 * (om - xp.swapaxes(om, -1, -2)), binv


def spin_covariant_derivative_kernel(g, phi_ri, spacing, xp=np):
    """nabla_k phi in the g-orthonormal frame.

    phi_ri has shape (N,N,N,2,2), last axis = (re, im); the result has shape
    (N,N,N,3,2,2) with the frame index first.
    nabla_k phi = e~_k(phi) + 1/4 om_{kij} gamma^i gamma^j phi.
    """
    om, binv = spin_connection_kernel(g, spacing, xp=xp)
    dphi = xp.stack([d4(phi_ri, a, spacing, xp=xp) for a in range(3)], axis=-4)
    # directional derivative along e~_k: binv[m, k] d_m phi
    dir_k = xp.einsum("...mk,...msr->...ksr", binv, dphi)
    # connection term: 1/4 om[k, i, j] (gamma^i gamma^j) phi  (complex algebra
    # expanded over the trailing re/im axis)
    ggre = xp.asarray(_GG_RE)
    ggim = xp.asarray(_GG_IM)
    mre = xp.einsum("...kij,ijsr->...ksr", om, ggre)
    mim = xp.einsum("...kij,ijsr->...ksr", om, ggim)
    re, im = phi_ri[..., 0], phi_ri[..., 1]
    conn_re = xp.einsum("...ksr,...r->...ks", mre, re) - xp.einsum(
        "...ksr,...r->...ks", mim, im)
    conn_im = xp.einsum("...ksr,...r->...ks", mre, im) + xp.einsum(
        "...ksr,...r->...ks", mim, re)
    conn = xp.stack([conn_re, conn_im], axis=-1)
    return dir_k + 0.25 * conn


def spin_covariant_derivative(conf):
    """nabla^g phi in the transferred orthonormal frame; shape (N,N,N,3,2)."""
    conf.validate()
    phi_ri = np.stack([conf.phi.real, conf.phi.imag], axis=-1)
    out = spin_covariant_derivative_kernel(conf.g, phi_ri, conf.grid.spacing)
    out = np.asarray(out)
    return out[..., 0] + 1j * out[..., 1]


def clifford_two_form(omega, phi):
    """Clifford action of a 2-form given in an orthonormal frame:
    omega . phi = sum_{i<j} omega_{ij} gamma^i gamma^j phi."""
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=complex)
    iu, ju = np.triu_indices(3, k=1)
    mats = np.einsum("...p,psr->...sr", omega[..., iu, ju], _GG[iu, ju])
    return np.einsum("...sr,...r->...s", mats, phi)


# ---------------------------------------------------------------------------
# the chart

def chart_to(base, tangent, renormalize=False):
    """Xi: (h, psi) -> (g + h, phi + psi) in stored components.

    Raises ChartDomainError if g + h stops being a metric.  The spinor is
    renormalized to pointwise unit norm only on request.
    """
    g_new = base.g + tangent.h
    try:
        validate_metric(g_new, where="chart target")
    except Exception as exc:
        raise ChartDomainError(str(exc)) from exc
    phi_new = base.phi + tangent.psi
    if renormalize:
        phi_new = phi_new / np.sqrt(np.sum(np.abs(phi_new) ** 2, axis=-1))[..., None]
    return Configuration(g_new, phi_new)


def chart_from(base, conf):
    """Xi^{-1}: recover the tangent section, exact inverse of chart_to."""
    return TangentSection(conf.g - base.g, conf.phi - base.phi)


def flat_constant_configuration(n, spinor=(1.0, 0.0)):
    """The absolute minimizer: flat metric, constant unit spinor."""
    phi = np.zeros((n, n, n, 2), dtype=complex)
    s = np.asarray(spinor, dtype=complex)
    s = s / np.linalg.norm(s)
    phi[...] = s
    return Configuration(flat_metric(n), phi)
