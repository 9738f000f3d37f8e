"""Entanglement and distinguishability measures.

Concurrence for two qubits, the generalized geometric measure (GGM) for
pure multipartite states, maximal-entanglement tests, the Helstrom error
for binary state discrimination, and classical mutual information for
scoring decode tables.  Entropies are in bits (base-2 logarithms).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .linalg import DensityMatrix, Ket, SubsystemLayout, schmidt_decomposition
from .numeric import ResourceGuardError, policy

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


def concurrence_2qubit(rho: DensityMatrix) -> float:
    """Two-qubit concurrence from the spin-flipped spectrum.

    max(0, l1 - l2 - l3 - l4) where the l's are the decreasingly ordered
    square roots of the eigenvalues of rho * (sy(x)sy) rho^* (sy(x)sy).
    See https://en.wikipedia.org/wiki/Concurrence_(quantum_computing).

    The l's are computed as singular values of sqrt(rho) (sy(x)sy)
    sqrt(rho)^*, which avoids the square-root noise amplification of the
    direct eigenvalue route near rank-deficient states.
    """
    if rho.dim != 4:
        raise ValueError(f"concurrence is defined for two qubits, got dimension {rho.dim}")
    yy = np.kron(_SIGMA_Y, _SIGMA_Y)
    vals, vecs = np.linalg.eigh(rho.entries)
    vals = np.where(vals < 1e-15, 0.0, vals)
    sqrt_rho = (vecs * np.sqrt(vals)) @ vecs.conj().T
    lams = np.linalg.svd(sqrt_rho @ yy @ sqrt_rho.conj(), compute_uv=False)
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


@dataclass(frozen=True)
class BipartitionReport:
    cut: tuple[tuple[str, ...], tuple[str, ...]]
    top_schmidt_sq: float

    def __post_init__(self):
        if not 0.0 < self.top_schmidt_sq <= 1.0 + policy.structural_tol:
            raise ValueError(f"top squared Schmidt coefficient {self.top_schmidt_sq} out of (0, 1]")


def bipartition_reports(psi: Ket, layout: SubsystemLayout) -> list[BipartitionReport]:
    """Top squared Schmidt coefficient for every nonempty proper bipartition."""
    n = layout.n_subsystems
    if n < 2:
        raise ValueError("need at least two subsystems")
    if n > policy.max_ggm_parties:
        raise ResourceGuardError(
            f"bipartition enumeration over {n} parties exceeds the cap of "
            f"{policy.max_ggm_parties}"
        )
    reports = []
    # every unordered cut exactly once: the side containing the first label
    for r in range(1, n):
        for rest in combinations(range(1, n), r - 1):
            left_pos = (0,) + rest
            if len(left_pos) == n:
                continue
            left = tuple(layout.labels[p] for p in left_pos)
            right = tuple(l for l in layout.labels if l not in left)
            dec = schmidt_decomposition(psi, layout, left)
            reports.append(BipartitionReport((left, right), float(dec.coefficients[0] ** 2)))
    return reports


def ggm(psi: Ket, layout: SubsystemLayout) -> float:
    """Generalized geometric measure of a pure multipartite state.

    One minus the largest squared top Schmidt coefficient over all
    bipartitions; 0 for states product across some cut, (d-1)/d for
    d-level GHZ states.
    """
    reports = bipartition_reports(psi, layout)
    top = max(r.top_schmidt_sq for r in reports)
    return float(min(max(1.0 - top, 0.0), 1.0))


def is_maximally_entangled(
    psi: Ket, layout: SubsystemLayout, left_labels, tol: float | None = None
) -> bool:
    """True iff all Schmidt coefficients across the cut equal 1/sqrt(m)."""
    tol = policy.spectral_tol if tol is None else float(tol)
    dec = schmidt_decomposition(psi, layout, left_labels)
    m = len(dec.coefficients)
    return bool(np.abs(dec.coefficients - 1.0 / np.sqrt(m)).max() <= tol)


def helstrom_error(rho0: DensityMatrix, rho1: DensityMatrix, p0: float) -> float:
    """Minimal error probability for discriminating rho0 (prior p0) from rho1."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"prior {p0} out of [0, 1]")
    if rho0.dim != rho1.dim:
        raise ValueError("dimension mismatch")
    eigs = np.linalg.eigvalsh(p0 * rho0.entries - (1.0 - p0) * rho1.entries)
    err = 0.5 * (1.0 - np.abs(eigs).sum())
    return float(min(max(err, 0.0), 0.5))


def mutual_information(joint_pmf) -> float:
    """Shannon mutual information of a joint pmf, in bits (0 log 0 := 0)."""
    p = np.asarray(joint_pmf, dtype=float)
    if p.ndim != 2:
        raise ValueError("joint pmf must be a matrix")
    if (p < -policy.spectral_tol).any():
        raise ValueError("pmf entries must be nonnegative")
    total = p.sum()
    if abs(total - 1.0) > policy.spectral_tol:
        raise ValueError(f"pmf sums to {total!r}, not 1")
    p = np.clip(p, 0.0, None)
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mi = 0.0
    for i in range(p.shape[0]):
        for j in range(p.shape[1]):
            if p[i, j] > 0.0:
                mi += p[i, j] * np.log2(p[i, j] / (px[i] * py[j]))
    return float(max(mi, 0.0))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(0.5 * np.abs(p - q).sum())
