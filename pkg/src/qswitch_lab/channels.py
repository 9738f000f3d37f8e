"""Kraus channels: construction, application, Choi matrices, equality.

A channel is stored as its list of Kraus operators.  Channel identity is
always decided through the Choi matrix (two Kraus lists describe the same
channel iff their Choi matrices coincide), with the Frobenius distance
reported alongside every verdict.

The Choi matrix uses the unnormalized convention ``C = (id (x) ch)(Omega)``
with ``Omega = sum_{k,l} |kk><ll|``, so ``trace(C) = in_dim`` and the
partial trace of ``C`` over the output factor equals the identity for a
trace-preserving channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DensityMatrix, Operator, _conjugate_embedded, _readonly
from .numeric import policy

import math
from typing import Sequence


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving completely positive map given by Kraus operators."""

    kraus: tuple[np.ndarray, ...]
    in_dim: int
    out_dim: int

    def __post_init__(self):
        ops = tuple(_readonly(np.asarray(k, dtype=complex)) for k in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.out_dim, self.in_dim):
                raise ValueError(
                    f"Kraus operator shape {k.shape} != (out_dim, in_dim) = "
                    f"({self.out_dim}, {self.in_dim})"
                )
        total = sum(k.conj().T @ k for k in ops)
        dev = np.abs(total - np.eye(self.in_dim)).max()
        if dev > policy.spectral_tol:
            raise ValueError(f"not trace preserving: max |sum K^dag K - I| = {dev:.3e}")
        object.__setattr__(self, "kraus", ops)

    @classmethod
    def from_operators(cls, ops: Sequence[np.ndarray | Operator]) -> "KrausChannel":
        mats = [o.entries if isinstance(o, Operator) else np.asarray(o, dtype=complex) for o in ops]
        out_dim, in_dim = mats[0].shape
        return cls(tuple(mats), in_dim, out_dim)

    @property
    def n_kraus(self) -> int:
        return len(self.kraus)

    def is_square(self) -> bool:
        return self.in_dim == self.out_dim


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel((np.eye(d, dtype=complex),), d, d)


def erasing_channel(d: int, j: int) -> KrausChannel:
    """Channel mapping every state of a d-level system to |j><j|.

    Kraus set { |j><i| : i = 0..d-1 }.
    """
    if not 0 <= j < d:
        raise ValueError(f"target index {j} out of range for dimension {d}")
    ops = []
    for i in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[j, i] = 1.0
        ops.append(m)
    return KrausChannel(tuple(ops), d, d)


# ---------------------------------------------------------------------------
# Vacuum extensions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtendedChannel:
    """A channel enlarged with a vacuum sector.

    The realized channel acts on dimension ``d+1`` where the last basis
    index is the vacuum state; its Kraus operators are the base operators
    padded with the vacuum amplitudes on the corner: ``K_i (+) alpha_i``.
    Which extension is chosen matters: controlled-choice combinators built
    from the same base channels but different amplitudes are different
    channels.
    """

    base: KrausChannel
    amplitudes: np.ndarray
    realized: KrausChannel

    @property
    def target_dim(self) -> int:
        return self.base.in_dim


def vacuum_extend(base: KrausChannel, amplitudes) -> ExtendedChannel:
    """Extend a channel with one vacuum level and the given amplitudes.

    ``amplitudes`` must have one entry per Kraus operator and unit Euclidean
    norm; the vacuum level is appended as the last basis index and is a
    fixed point of the realized channel.
    """
    if not base.is_square():
        raise ValueError("only square channels can be vacuum-extended")
    alpha = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if alpha.shape[0] != base.n_kraus:
        raise ValueError(
            f"got {alpha.shape[0]} amplitudes for {base.n_kraus} Kraus operators"
        )
    nrm = np.linalg.norm(alpha)
    if abs(nrm - 1.0) > policy.spectral_tol:
        raise ValueError(f"amplitude vector norm is {nrm!r}, not 1")
    d = base.in_dim
    ops = []
    for k, a in zip(base.kraus, alpha):
        m = np.zeros((d + 1, d + 1), dtype=complex)
        m[:d, :d] = k
        m[d, d] = a
        ops.append(m)
    realized = KrausChannel(tuple(ops), d + 1, d + 1)
    return ExtendedChannel(base, _readonly(alpha), realized)


def _householder_to_e0(alpha: np.ndarray) -> np.ndarray:
    """Unitary built from one Householder reflection mapping alpha to e_0.

    A global phase is absorbed first so the reflection lands exactly on
    e_0 rather than on a phase multiple of it.
    """
    n = alpha.shape[0]
    phase = np.exp(-1j * np.angle(alpha[0])) if abs(alpha[0]) > 0 else 1.0
    a = phase * alpha
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    w = a - e0
    wn = np.linalg.norm(w)
    if wn < 1e-14:
        return phase * np.eye(n, dtype=complex)
    h = np.eye(n, dtype=complex) - 2.0 * np.outer(w, w.conj()) / (wn * wn)
    return h * phase


def remix(ch: KrausChannel, unitary: np.ndarray) -> KrausChannel:
    """Change Kraus representation: K'_m = sum_i U[m, i] K_i (same channel)."""
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (ch.n_kraus, ch.n_kraus):
        raise ValueError("remixing unitary must be square over the Kraus index")
    new_ops = tuple(
        sum(u[m, i] * ch.kraus[i] for i in range(ch.n_kraus)) for m in range(ch.n_kraus)
    )
    return KrausChannel(new_ops, ch.in_dim, ch.out_dim)


def canonicalize_extension(ext: ExtendedChannel) -> ExtendedChannel:
    """Rewrite an extension so its amplitude vector becomes (1, 0, ..., 0).

    The Kraus list is remixed by a single Householder reflection; the
    realized channel (and hence its Choi matrix) is unchanged.
    """
    u = _householder_to_e0(ext.amplitudes)
    new_base = remix(ext.base, u)
    new_alpha = u @ ext.amplitudes
    new_alpha[0] = new_alpha[0].real  # exact up to rounding; pin to 1
    new_alpha = np.where(np.abs(new_alpha) < 1e-13, 0.0, new_alpha)
    new_alpha[0] = 1.0
    return vacuum_extend(new_base, new_alpha)


# ---------------------------------------------------------------------------
# Application, Choi, equality
# ---------------------------------------------------------------------------


def apply(ch: KrausChannel, rho: DensityMatrix, acting_on: Sequence[str]) -> DensityMatrix:
    """Apply the channel to the addressed labels, identity elsewhere.

    ``acting_on`` is ordered: its k-th label corresponds to the k-th tensor
    factor of the channel's input space.
    """
    if not ch.is_square():
        raise ValueError("only square channels can be embedded with identity padding")
    positions = rho.layout.positions(acting_on)
    acted_dim = math.prod(rho.layout.dims[p] for p in positions)
    if acted_dim != ch.in_dim:
        raise ValueError(
            f"channel input dimension {ch.in_dim} does not match labels "
            f"{tuple(acting_on)} with total dimension {acted_dim}"
        )
    out = _conjugate_embedded(rho.entries, rho.layout.dims, positions, list(ch.kraus))
    return DensityMatrix(out, rho.layout)


@dataclass(frozen=True)
class ChoiMatrix:
    """Unnormalized Choi matrix; factor order is input (x) output."""

    entries: np.ndarray
    in_dim: int
    out_dim: int

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        n = self.in_dim * self.out_dim
        if m.shape != (n, n):
            raise ValueError(f"Choi matrix must be {n}x{n}")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < policy.psd_floor:
            raise ValueError(f"Choi matrix not PSD: min eigenvalue {min_eig:.3e}")
        red = np.einsum(
            m.reshape(self.in_dim, self.out_dim, self.in_dim, self.out_dim), [0, 2, 1, 2]
        )
        dev = np.abs(red - np.eye(self.in_dim)).max()
        if dev > policy.spectral_tol:
            raise ValueError(f"output marginal of Choi differs from identity by {dev:.3e}")
        object.__setattr__(self, "entries", _readonly(m))


def choi(ch: KrausChannel) -> ChoiMatrix:
    """Choi matrix sum_i |K_i>><<K_i| with |K>> = sum_k |k> (x) K|k>."""
    n = ch.in_dim * ch.out_dim
    c = np.zeros((n, n), dtype=complex)
    for k in ch.kraus:
        v = k.T.reshape(-1)
        c += np.outer(v, v.conj())
    return ChoiMatrix(c, ch.in_dim, ch.out_dim)


@dataclass(frozen=True)
class ChannelComparison:
    equal: bool
    distance: float
    tol: float

    def __bool__(self) -> bool:
        return self.equal


def channels_equal(a: KrausChannel, b: KrausChannel, tol: float | None = None) -> ChannelComparison:
    """Choi-based equality test; the Frobenius distance is always reported."""
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim):
        raise ValueError(
            f"dimension mismatch: ({a.in_dim}->{a.out_dim}) vs ({b.in_dim}->{b.out_dim})"
        )
    tol = policy.spectral_tol if tol is None else float(tol)
    dist = float(np.linalg.norm(choi(a).entries - choi(b).entries))
    return ChannelComparison(dist <= tol, dist, tol)


def restrict_channel(ch: KrausChannel, keep_indices: Sequence[int]) -> KrausChannel:
    """Compress a channel onto an invariant subspace (given basis indices).

    Valid only when the channel maps the subspace into itself; this is
    checked through the trace-preservation test of the compressed operators.
    """
    idx = list(keep_indices)
    ops = tuple(k[np.ix_(idx, idx)] for k in ch.kraus)
    ops = tuple(k for k in ops if np.abs(k).max() > policy.zero_operator_tol)
    return KrausChannel(ops, len(idx), len(idx))
