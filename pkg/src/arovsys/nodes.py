"""Finite-dimensional unitary nodes, isometry extensions, and the feedback
transforms that parametrize their characteristic functions.

A unitary node is a unitary matrix U from state + input-coefficient space to
state + output-coefficient space; its characteristic function
w(zeta) = P_out (I - zeta U P_state)^(-1) U |_in is a Schur-class matrix
function on the disk.  Extending an isometry V by identity pairings of its
defect spaces yields a node whose block characteristic function S has
s(0) = 0, and the Redheffer transform of S sweeps out the characteristic
functions of all unitary extensions of V.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DefectMismatch,
    IllConditioned,
    SingularResolvent,
    SingularS1,
)

__all__ = [
    "UnitaryNode",
    "IsometrySpec",
    "AGNode",
    "AGBlocks",
    "char_function",
    "ag_extension",
    "ag_blocks",
    "redheffer",
    "potapov_ginzburg",
    "pg_consistency",
    "random_unitary",
    "random_isometry_spec",
    "unitary_extension",
]

_UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class UnitaryNode:
    """Unitary matrix acting state+coeff -> state+coeff, with dim bookkeeping."""

    matrix: np.ndarray
    n_state: int
    n_coeff: int

    def __post_init__(self):
        m = self.matrix
        n = self.n_state + self.n_coeff
        if m.shape != (n, n):
            raise DefectMismatch(f"node matrix shape {m.shape}, expected ({n}, {n})")
        if self.n_state < 0 or self.n_coeff < 1:
            raise DefectMismatch("need n_state >= 0 and n_coeff >= 1")
        defect = np.abs(m.conj().T @ m - np.eye(n)).max()
        if defect > _UNITARY_TOL * max(1.0, float(np.abs(m).max())):
            raise DefectMismatch(f"matrix is not unitary: defect {defect:.3e}")


def char_function(node: UnitaryNode, zeta: complex) -> np.ndarray:
    """Characteristic function P_out (I - zeta U P_state)^(-1) U |_in."""
    zeta = complex(zeta)
    if abs(zeta) >= 1.0:
        raise ValueError("zeta must lie in the open unit disk")
    nh, ne = node.n_state, node.n_coeff
    u = node.matrix
    if nh == 0:
        return u.copy()
    resolvent = np.eye(nh + ne, dtype=complex)
    resolvent[:, :nh] -= zeta * u[:, :nh]
    try:
        x = np.linalg.solve(resolvent, u[:, nh:])
    except np.linalg.LinAlgError as exc:  # cannot happen for |zeta| < 1
        raise SingularResolvent(f"resolvent singular at zeta = {zeta}") from exc
    return x[nh:, :]


@dataclass(frozen=True)
class IsometrySpec:
    """An isometry V on a domain subspace of state+input space.

    ``domain`` holds an orthonormal basis of the domain as columns;
    ``v`` maps the full space but only its action on the domain matters.
    Input and output coefficient spaces have the same dimension, so the two
    defect dimensions agree.
    """

    v: np.ndarray
    domain: np.ndarray
    n_state: int
    n_coeff: int

    def __post_init__(self):
        n = self.n_state + self.n_coeff
        if self.v.shape != (n, n):
            raise DefectMismatch(f"V must be ({n}, {n}), got {self.v.shape}")
        d = self.domain
        if d.ndim != 2 or d.shape[0] != n or d.shape[1] > n:
            raise DefectMismatch(f"domain basis shape {d.shape} inconsistent with n={n}")
        if d.shape[1]:
            ortho = np.abs(d.conj().T @ d - np.eye(d.shape[1])).max()
            if ortho > _UNITARY_TOL:
                raise DefectMismatch(f"domain basis not orthonormal: {ortho:.3e}")
            r = self.v @ d
            iso = np.abs(r.conj().T @ r - np.eye(d.shape[1])).max()
            if iso > _UNITARY_TOL:
                raise DefectMismatch(f"V is not isometric on its domain: {iso:.3e}")

    @property
    def n_defect(self) -> int:
        return self.n_state + self.n_coeff - self.domain.shape[1]


def _orthonormal_complement(basis: np.ndarray, dim: int) -> np.ndarray:
    """Deterministic orthonormal completion of ``basis`` columns in C^dim."""
    d = basis.shape[1] if basis.size else 0
    if d == dim:
        return np.zeros((dim, 0), dtype=complex)
    proj = np.eye(dim, dtype=complex)
    if d:
        proj -= basis @ basis.conj().T
    # eigenvectors of the complement projector span the complement
    w, vecs = np.linalg.eigh(proj)
    comp = vecs[:, w > 0.5]
    if comp.shape[1] != dim - d:
        raise DefectMismatch("could not complete basis to an orthonormal one")
    # fix phases for reproducibility
    for j in range(comp.shape[1]):
        idx = int(np.argmax(np.abs(comp[:, j])))
        phase = comp[idx, j] / abs(comp[idx, j])
        comp[:, j] = comp[:, j] / phase
    return comp


@dataclass(frozen=True)
class AGNode:
    """Extension node with its partition: coefficients are (E, defect) blocks."""

    node: UnitaryNode
    n_coeff: int
    n_defect: int
    domain_defect_basis: np.ndarray
    range_defect_basis: np.ndarray


def ag_extension(spec: IsometrySpec) -> AGNode:
    """Extend V by identity pairings of its defects into a unitary node.

    The node maps state + E1 + N2 -> state + N1 + E2, acting as V on the
    domain, as the identity N_dom -> N1 on the domain defect, and as the
    identity N2 -> N_ran on the range defect.  Its characteristic blocks
    satisfy s(0) = 0 by construction.
    """
    nk, ne = spec.n_state, spec.n_coeff
    n = nk + ne
    nd = spec.n_defect
    dom = spec.domain
    n1_basis = _orthonormal_complement(dom, n)
    ran = spec.v @ dom if dom.size else np.zeros((n, 0), dtype=complex)
    n2_basis = _orthonormal_complement(ran, n)
    if n1_basis.shape[1] != nd or n2_basis.shape[1] != nd:
        raise DefectMismatch("defect dimensions inconsistent")
    # rows: state (nk), N1 (nd), E2 (ne); cols: state (nk), E1 (ne), N2 (nd)
    a = np.zeros((nk + nd + ne, nk + ne + nd), dtype=complex)
    v_dom = spec.v @ dom @ dom.conj().T  # acts on state+E1, lands in state+E2
    a[:nk, :n] = v_dom[:nk, :]
    a[nk + nd:, :n] = v_dom[nk:, :]
    a[nk:nk + nd, :n] = n1_basis.conj().T
    a[:nk, n:] = n2_basis[:nk, :]
    a[nk + nd:, n:] = n2_basis[nk:, :]
    node = UnitaryNode(matrix=a, n_state=nk, n_coeff=ne + nd)
    return AGNode(node=node, n_coeff=ne, n_defect=nd,
                  domain_defect_basis=n1_basis, range_defect_basis=n2_basis)


@dataclass(frozen=True)
class AGBlocks:
    """Blocks of S(zeta) = [[s1, s], [s0, s2]] : E1 + N2 -> N1 + E2."""

    zeta: complex
    s1: np.ndarray  # E1 -> N1
    s: np.ndarray  # N2 -> N1
    s0: np.ndarray  # E1 -> E2
    s2: np.ndarray  # N2 -> E2


def ag_blocks(ag: AGNode, zeta: complex) -> AGBlocks:
    """Evaluate the extension node's characteristic blocks at zeta."""
    full = char_function(ag.node, zeta)
    nd, ne = ag.n_defect, ag.n_coeff
    # full rows: (N1, E2); cols: (E1, N2)
    return AGBlocks(
        zeta=complex(zeta),
        s1=full[:nd, :ne],
        s=full[:nd, ne:],
        s0=full[nd:, :ne],
        s2=full[nd:, ne:],
    )


def redheffer(blocks: AGBlocks, e_param: np.ndarray, cond_cap: float = 1e12) -> np.ndarray:
    """Feedback transform w = s0 + s2 E (I - s E)^(-1) s1 for ||E|| <= 1.

    Well posed because s(0) = 0 forces ||s(zeta) E|| <= |zeta| < 1.
    """
    e = np.asarray(e_param, dtype=complex)
    nd = blocks.s.shape[1]
    if e.shape != (nd, blocks.s.shape[0]):
        raise ValueError(f"parameter must map N1 -> N2, shape ({nd}, {blocks.s.shape[0]})")
    if e.size and np.linalg.norm(e, 2) > 1.0 + 1e-12:
        raise ValueError("parameter must be contractive")
    core = np.eye(blocks.s.shape[0], dtype=complex) - blocks.s @ e
    if core.size and np.linalg.cond(core) > cond_cap:
        raise IllConditioned("feedback resolvent condition number exceeds cap")
    return blocks.s0 + blocks.s2 @ e @ np.linalg.solve(core, blocks.s1)


def potapov_ginzburg(blocks: AGBlocks) -> np.ndarray:
    """Block transform W = [[I, -s0], [0, -s1]]^(-1) [[s2, 0], [s, -I]].

    Requires the defect and coefficient dimensions to match and s1 to be
    invertible; W21(0) = 0, the upper-triangularity that characterizes the
    triangular gauge on the chain side.
    """
    ne = blocks.s0.shape[0]
    nd = blocks.s.shape[0]
    if blocks.s1.shape[0] != blocks.s1.shape[1]:
        raise SingularS1("s1 is not square; transform undefined")
    if np.linalg.cond(blocks.s1) > 1e12:
        raise SingularS1("s1 is numerically singular")
    left = np.block([
        [np.eye(ne, dtype=complex), -blocks.s0],
        [np.zeros((nd, ne), dtype=complex), -blocks.s1],
    ])
    right = np.block([
        [blocks.s2, np.zeros((ne, nd), dtype=complex)],
        [blocks.s, -np.eye(nd, dtype=complex)],
    ])
    return np.linalg.solve(left, right)


def pg_consistency(blocks: AGBlocks, e_param: np.ndarray) -> float:
    """|| redheffer(S, E) - (W11 E + W12)(W21 E + W22)^(-1) ||_max."""
    w_direct = redheffer(blocks, e_param)
    w_mat = potapov_ginzburg(blocks)
    ne = blocks.s0.shape[0]
    e = np.asarray(e_param, dtype=complex)
    w11, w12 = w_mat[:ne, :ne], w_mat[:ne, ne:]
    w21, w22 = w_mat[ne:, :ne], w_mat[ne:, ne:]
    w_pg = (w11 @ e + w12) @ np.linalg.inv(w21 @ e + w22)
    return float(np.abs(w_direct - w_pg).max())


# -- deterministic random builders (demo and tests) ---------------------------


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish unitary via QR with the phase convention fixed."""
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_isometry_spec(
    rng: np.random.Generator, n_state: int, n_coeff: int, n_domain: Optional[int] = None
) -> IsometrySpec:
    """Random isometry on a random domain subspace; defaults to defect = n_coeff."""
    n = n_state + n_coeff
    d = n_state if n_domain is None else n_domain
    if not 0 <= d <= n:
        raise DefectMismatch(f"domain dimension {d} out of range")
    dom = random_unitary(rng, n)[:, :d]
    v = random_unitary(rng, n)
    return IsometrySpec(v=v, domain=dom, n_state=n_state, n_coeff=n_coeff)


def unitary_extension(spec: IsometrySpec, rng: np.random.Generator) -> UnitaryNode:
    """Unitary extension of V with a random unitary pairing of the defects."""
    ag = ag_extension(spec)
    nd = ag.n_defect
    pairing = random_unitary(rng, nd)
    dom = spec.domain
    n = spec.n_state + spec.n_coeff
    v_dom = spec.v @ dom @ dom.conj().T if dom.size else np.zeros((n, n), dtype=complex)
    u = v_dom + ag.range_defect_basis @ pairing @ ag.domain_defect_basis.conj().T
    return UnitaryNode(matrix=u, n_state=spec.n_state, n_coeff=spec.n_coeff)
