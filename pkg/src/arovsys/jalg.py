"""Exact and numerical 2x2 complex linear algebra in the metric j = diag(-1, 1).

Everything here is plain numpy: a "matrix" is a (2, 2) complex ndarray, and
the batched helpers accept (..., 2, 2) stacks.  The two signature matrices in
use are ``JAY = diag(-1, 1)`` and the rotation ``CALJ = [[0, 1], [-1, 0]]``;
a matrix M is called j-unitary / j-expanding / j-contractive according to the
sign of the defect form M* j M - j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    HyperbolicOverflow,
    NotContractive,
    NotPSD,
    NotUnimodular,
    PoleHit,
    SingularModulus,
)

__all__ = [
    "JAY",
    "CALJ",
    "TOL_ALGEBRAIC",
    "TOL_CLASSIFY",
    "TriangularFactor",
    "ConvergenceProbe",
    "as_matrix2",
    "j_defect",
    "hermitian_defect",
    "classify",
    "psd_sqrt2",
    "orlov_modulus",
    "polar_ju",
    "arov_normalize",
    "triangular_expanding_check",
    "mobius",
    "signature_conjugator",
    "product_convergence_probe",
    "expm2",
]

TOL_ALGEBRAIC = 1e-10
TOL_CLASSIFY = 1e-8

JAY = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
JAY.setflags(write=False)

CALJ = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
CALJ.setflags(write=False)

_EYE2 = np.eye(2, dtype=complex)
_EYE2.setflags(write=False)


def as_matrix2(m) -> np.ndarray:
    """Validate and return a finite (2, 2) complex matrix."""
    out = np.asarray(m, dtype=complex)
    if out.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out.view(float))):
        raise ValueError("matrix entries must be finite")
    return out


def j_defect(m, sig=JAY) -> np.ndarray:
    """Defect form M* sig M - sig (Hermitian whenever sig is)."""
    m = as_matrix2(m)
    return m.conj().T @ sig @ m - sig


def hermitian_defect(m, sig=JAY) -> np.ndarray:
    """Hermitian version of the defect: D for JAY, i*D for the rotation CALJ."""
    d = j_defect(m, sig)
    if np.allclose(sig, CALJ):
        d = 1j * d
    return 0.5 * (d + d.conj().T)


def classify(m, tol: float = TOL_CLASSIFY, sig=JAY) -> str:
    """Classify M by the eigenvalues of its (Hermitian) defect form.

    Returns one of "j_unitary", "j_expanding", "j_contractive", "none".
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    eig = np.linalg.eigvalsh(hermitian_defect(m, sig))
    if np.max(np.abs(eig)) <= tol:
        return "j_unitary"
    if eig[0] >= -tol:
        return "j_expanding"
    if eig[-1] <= tol:
        return "j_contractive"
    return "none"


def psd_sqrt2(m, tol: float = TOL_ALGEBRAIC) -> np.ndarray:
    """Unique PSD square root of a Hermitian PSD 2x2 matrix.

    Closed form (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)); the zero
    matrix is its own root.  Eigenvalues in [-tol, 0) are treated as 0;
    anything below raises NotPSD.
    """
    m = as_matrix2(m)
    h = 0.5 * (m + m.conj().T)
    if np.max(np.abs(m - h)) > max(tol, tol * np.abs(m).max()):
        raise NotPSD("matrix is not Hermitian")
    eig = np.linalg.eigvalsh(h)
    scale = max(1.0, float(np.abs(eig).max()))
    if eig[0] < -tol * scale:
        raise NotPSD(f"eigenvalue {eig[0]:.3e} below -tol")
    if eig[0] < 0.0:
        # clamp the rounding-level negative part
        w, v = np.linalg.eigh(h)
        w = np.clip(w, 0.0, None)
        h = (v * w) @ v.conj().T
    det = max(float(np.real(h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0])), 0.0)
    tr = float(np.real(h[0, 0] + h[1, 1]))
    denom = tr + 2.0 * np.sqrt(det)
    if denom <= 0.0:
        return np.zeros((2, 2), dtype=complex)
    return (h + np.sqrt(det) * _EYE2) / np.sqrt(denom)


def _contractivity_gap(w) -> float:
    """Smallest eigenvalue of j - W* j W (>= 0 means j-contractive)."""
    gamma = JAY - w.conj().T @ JAY @ w
    return float(np.linalg.eigvalsh(0.5 * (gamma + gamma.conj().T))[0])


def orlov_modulus(w, tol: float = TOL_CLASSIFY, invert_expanding: bool = False) -> np.ndarray:
    """j-modulus R of a j-contractive invertible W, so that j R^2 = W* j W.

    R = I - j G (I + (I - G j G)^(1/2))^(-1) G with G = (j - W* j W)^(1/2).
    R is j-hermitian (j R = R* j).  With ``invert_expanding`` a j-expanding
    input is handled by factoring W^(-1) and inverting the result.
    """
    w = as_matrix2(w)
    scale = max(1.0, float(np.abs(w).max()) ** 2)
    gap = _contractivity_gap(w)
    if gap < -tol * scale:
        if invert_expanding and classify(w, tol) in ("j_expanding", "j_unitary"):
            return np.linalg.inv(orlov_modulus(np.linalg.inv(w), tol))
        raise NotContractive(f"j - W* j W has eigenvalue {gap:.3e}")
    gamma = JAY - w.conj().T @ JAY @ w
    gamma = 0.5 * (gamma + gamma.conj().T)
    g = psd_sqrt2(gamma, tol=max(tol, abs(gap) * 2.0 + 1e-15))
    inner = _EYE2 - g @ JAY @ g
    inner = 0.5 * (inner + inner.conj().T)
    q = psd_sqrt2(inner, tol=1e-9 * scale)
    return _EYE2 - JAY @ g @ np.linalg.inv(_EYE2 + q) @ g


def polar_ju(w, tol: float = TOL_CLASSIFY) -> tuple[np.ndarray, np.ndarray]:
    """Polar factorization W = U R with U j-unitary and R the j-modulus."""
    w = as_matrix2(w)
    r = orlov_modulus(w, tol)
    det = r[0, 0] * r[1, 1] - r[0, 1] * r[1, 0]
    if abs(det) < 1e-14 * max(1.0, float(np.abs(r).max()) ** 2):
        raise SingularModulus("j-modulus is numerically singular")
    u = w @ np.linalg.inv(r)
    return u, r


@dataclass(frozen=True)
class TriangularFactor:
    """Upper-triangular factor [[1/lam, h], [0, lam]] of the gauge normalization.

    For factors of j-expanding matrices lam >= 1 and |h| <= lam - 1/lam.
    """

    lam: float
    h: complex

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError("lam must be finite and positive")
        if not np.isfinite(complex(self.h)):
            raise ValueError("h must be finite")

    def matrix(self) -> np.ndarray:
        return np.array([[1.0 / self.lam, self.h], [0.0, self.lam]], dtype=complex)


def triangular_expanding_check(t: TriangularFactor) -> bool:
    """True iff [[1/lam, h], [0, lam]] is j-expanding, i.e. |h| <= lam - 1/lam."""
    return abs(t.h) <= t.lam - 1.0 / t.lam


def arov_normalize(b, tol: float = TOL_CLASSIFY) -> tuple[TriangularFactor, np.ndarray]:
    """Factor a det-1 matrix as B = T(lam, h) . U with U in SU(1,1).

    Construction: a diagonal phase aligning arg(b21) with arg(b22), a
    hyperbolic rotation [[cosh, sinh], [sinh, cosh]] annihilating the (2,1)
    entry, then a diagonal SU(1,1) factor making the diagonal positive.  The
    triangular part is invariant under right multiplication of B by SU(1,1)
    elements; lam >= 1 exactly when B is j-expanding or j-unitary.
    """
    b = as_matrix2(b)
    det = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    scale = max(1.0, float(np.abs(b).max()) ** 2)
    if abs(det - 1.0) > tol * scale:
        raise NotUnimodular(f"det = {det:.12g}, expected 1")

    b21, b22 = b[1, 0], b[1, 1]
    if abs(b21) >= abs(b22):
        raise HyperbolicOverflow("|b21| >= |b22|: cannot triangularize")

    if abs(b21) < 1e-300:
        u1 = _EYE2.copy()
        u2 = _EYE2.copy()
        b2 = b
    else:
        phi1 = 0.5 * (np.angle(b22) - np.angle(b21))
        u1 = np.diag([np.exp(1j * phi1), np.exp(-1j * phi1)])
        b1 = b @ u1
        ratio = float(np.real(b1[1, 0] / b1[1, 1]))
        phi2 = np.arctanh(-ratio)
        ch, sh = np.cosh(phi2), np.sinh(phi2)
        u2 = np.array([[ch, sh], [sh, ch]], dtype=complex)
        b2 = b1 @ u2

    phi3 = float(np.angle(b2[1, 1]))
    u3 = np.diag([np.exp(1j * phi3), np.exp(-1j * phi3)])
    a = b2 @ u3

    lam = float(np.real(a[1, 1]))
    factor = TriangularFactor(lam=lam, h=complex(a[0, 1]))
    u = np.linalg.inv(u1 @ u2 @ u3)
    return factor, u


def mobius(m, w: complex, tol: float = 1e-12) -> complex:
    """Linear-fractional action (m11 w + m12) / (m21 w + m22)."""
    m = as_matrix2(m)
    w = complex(w)
    den = m[1, 0] * w + m[1, 1]
    scale = max(1.0, abs(m[1, 0] * w), abs(m[1, 1]))
    if abs(den) <= tol * scale:
        raise PoleHit(f"denominator {den:.3e} vanishes")
    return complex((m[0, 0] * w + m[0, 1]) / den)


def signature_conjugator() -> np.ndarray:
    """Unitary U with i U CALJ U* = JAY; the fixed choice (1/sqrt2)[[1,-i],[1,i]]."""
    return np.array([[1.0, -1.0j], [1.0, 1.0j]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class ConvergenceProbe:
    """Outcome of probing an infinite triangular product for convergence."""

    converges: bool
    lambda_converges: bool
    equivalence_holds: bool
    partial_products: np.ndarray  # (n, 2, 2)
    lambda_products: np.ndarray  # (n,)


def _tail_oscillation(values: np.ndarray) -> np.ndarray:
    """osc[j] = max spread of values[j:] per real/imag component, maxed."""
    flat = values.reshape(values.shape[0], -1)
    comps = np.concatenate([flat.real, flat.imag], axis=1)
    hi = np.maximum.accumulate(comps[::-1], axis=0)[::-1]
    lo = np.minimum.accumulate(comps[::-1], axis=0)[::-1]
    return np.max(hi - lo, axis=1)


def _is_cauchy(values: np.ndarray, tol: float, min_tail: int = 3) -> bool:
    osc = _tail_oscillation(values)
    cut = len(osc) - min_tail
    if cut < 1:
        return bool(osc[0] <= tol)
    return bool(np.min(osc[:cut + 1]) <= tol)


def product_convergence_probe(
    factors: Sequence[TriangularFactor], tol: float = 1e-6
) -> ConvergenceProbe:
    """Partial products of triangular factors and their convergence verdict.

    Declares convergence when the partial-product sequence is Cauchy at the
    given tolerance on the supplied prefix, and asserts the equivalence with
    the Cauchy property of the diagonal products prod(lam_k).
    """
    if not factors:
        raise ValueError("need at least one factor")
    for k, f in enumerate(factors):
        if not triangular_expanding_check(f):
            raise ValueError(f"factor {k} is not j-expanding: lam={f.lam}, h={f.h}")
    mats = np.empty((len(factors), 2, 2), dtype=complex)
    lams = np.empty(len(factors))
    acc = _EYE2.copy()
    lam_acc = 1.0
    for k, f in enumerate(factors):
        acc = acc @ f.matrix()
        lam_acc *= f.lam
        mats[k] = acc
        lams[k] = lam_acc
    conv_b = _is_cauchy(mats, tol)
    conv_l = _is_cauchy(lams[:, None], tol)
    return ConvergenceProbe(
        converges=conv_b,
        lambda_converges=conv_l,
        equivalence_holds=(conv_b == conv_l),
        partial_products=mats,
        lambda_products=lams,
    )


def expm2(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of (..., 2, 2) stacks in closed form.

    exp(M) = e^mu (cosh(s) I + sinh(s)/s (M - mu I)) with mu = tr/2 and
    s^2 = mu^2 - det; sinh(s)/s is evaluated by series for small s.
    """
    m = np.asarray(m, dtype=complex)
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    mu = 0.5 * tr
    s2 = mu * mu - det
    s = np.sqrt(s2)
    small = np.abs(s) < 1e-6
    s_safe = np.where(small, 1.0, s)
    sinhc = np.where(small, 1.0 + s2 / 6.0 + s2 * s2 / 120.0, np.sinh(s_safe) / s_safe)
    cosh = np.where(small, 1.0 + s2 / 2.0 + s2 * s2 / 24.0, np.cosh(s_safe))
    eye = np.eye(2, dtype=complex)
    out = cosh[..., None, None] * eye + sinhc[..., None, None] * (m - mu[..., None, None] * eye)
    return np.exp(mu)[..., None, None] * out
