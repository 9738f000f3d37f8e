import numpy as np
import pytest

from qswitch_lab import DensityMatrix, Ket, SubsystemLayout


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_density(dim, rng, layout=None):
    """Random full-rank valid state: projected complex Gaussian."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    m /= m.trace()
    if layout is None:
        layout = SubsystemLayout((dim,), ("A",))
    return DensityMatrix(m, layout)


def random_ket(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return Ket.normalized(v)


def random_unitary(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def naive_partial_trace(entries, dims, keep):
    """Index-summation oracle: loop over all computational indices."""
    from itertools import product

    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    kdims = [dims[i] for i in keep]
    out_dim = int(np.prod(kdims))
    out = np.zeros((out_dim, out_dim), dtype=complex)

    def flat(idx):
        f = 0
        for d, i in zip(dims, idx):
            f = f * d + i
        return f

    def kflat(idx):
        f = 0
        for d, i in zip(kdims, idx):
            f = f * d + i
        return f

    for krow in product(*[range(dims[i]) for i in keep]):
        for kcol in product(*[range(dims[i]) for i in keep]):
            acc = 0.0 + 0.0j
            for t in product(*[range(dims[i]) for i in traced]):
                row = [0] * n
                col = [0] * n
                for pos, val in zip(keep, krow):
                    row[pos] = val
                for pos, val in zip(keep, kcol):
                    col[pos] = val
                for pos, val in zip(traced, t):
                    row[pos] = val
                    col[pos] = val
                acc += entries[flat(row), flat(col)]
            out[kflat(krow), kflat(kcol)] = acc
    return out
