"""Matplotlib figures for the report path.

Figures are a convenience companion to the CSV/JSON artifacts, never an
acceptance artifact.  SVG output strips the date metadata so identical runs
produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "arovsys"

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    kwargs = {}
    if str(path).endswith(".svg"):
        kwargs["metadata"] = {"Date": None}
    fig.savefig(path, **kwargs)
    plt.close(fig)


def plot_schur_abs(grid, path) -> None:
    """|w| over the half-axis angle theta = arctan(x)."""
    import numpy as np

    fig, ax = plt.subplots(figsize=(7, 4), dpi=120)
    order = np.argsort(grid.theta)
    ax.plot(grid.theta[order], np.abs(grid.values[order]), lw=0.8)
    ax.axhline(1.0, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel(r"$\theta = \arctan x$")
    ax.set_ylabel(r"$|w(\tan\theta)|$")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Schur spectral function on the real axis")
    fig.tight_layout()
    _save(fig, path)


def plot_entropy_convergence(report, path) -> None:
    """Entropy estimates against the node budget of each refinement."""
    fig, ax = plt.subplots(figsize=(7, 4), dpi=120)
    ax.semilogx(report.node_counts, report.estimates, "o-", base=2)
    if report.finite:
        ax.axhline(report.value, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("quadrature nodes")
    ax.set_ylabel("entropy estimate")
    ax.set_title("Entropy refinement" + ("" if report.converged else " (not converged)"))
    fig.tight_layout()
    _save(fig, path)


def plot_hamiltonian(ham, path) -> None:
    """Components of the B = 0 gauge Hamiltonian along the grid."""
    fig, ax = plt.subplots(figsize=(7, 4), dpi=120)
    ax.plot(ham.t, ham.samples[:, 0, 0].real, label=r"$h_{11}$", lw=0.9)
    ax.plot(ham.t, ham.samples[:, 0, 1].real, label=r"$\mathrm{Re}\,h_{12}$", lw=0.9)
    ax.plot(ham.t, ham.samples[:, 0, 1].imag, label=r"$\mathrm{Im}\,h_{12}$", lw=0.9)
    ax.plot(ham.t, ham.samples[:, 1, 1].real, label=r"$h_{22}$", lw=0.9, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("H(t) entries")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Hamiltonian of the diagonal gauge")
    fig.tight_layout()
    _save(fig, path)
