import numpy as np
import pytest

from qswitch_lab import (
    KrausChannel,
    SubsystemLayout,
    apply,
    basis_ket,
    canonicalize_extension,
    channels_equal,
    choi,
    erasing_channel,
    identity_channel,
    maximally_entangled_ket,
    remix,
    tensor,
    vacuum_extend,
    Ket,
    DensityMatrix,
)

from conftest import random_density, random_unitary


def oracle_choi(kraus_ops, in_dim, out_dim):
    """Independent Choi builder: (id (x) ch) applied to sum_kl |kk><ll|."""
    c = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
    for k in range(in_dim):
        for l in range(in_dim):
            ekl = np.zeros((in_dim, in_dim), dtype=complex)
            ekl[k, l] = 1.0
            image = sum(K @ ekl @ K.conj().T for K in kraus_ops)
            c += np.kron(ekl, image)
    return c


def oracle_apply(kraus_ops, rho_entries):
    return sum(K @ rho_entries @ K.conj().T for K in kraus_ops)


class TestKrausChannel:
    def test_requires_trace_preservation(self):
        half = [np.eye(2, dtype=complex) * 0.5]
        with pytest.raises(ValueError, match="trace preserving"):
            KrausChannel(tuple(half), 2, 2)

    def test_requires_consistent_shapes(self):
        ops = (np.eye(2, dtype=complex), np.eye(3, dtype=complex))
        with pytest.raises(ValueError, match="shape"):
            KrausChannel(ops, 2, 2)


class TestErasingChannel:
    def test_erases_plus_state(self):
        rho = Ket.normalized([1, 1]).density()
        out = apply(erasing_channel(2, 0), rho, ("A",))
        assert np.allclose(out.entries, np.diag([1.0, 0.0]), atol=1e-12)

    def test_erases_maximally_mixed(self):
        rho = DensityMatrix(np.eye(2) / 2, SubsystemLayout((2,), ("A",)))
        out = apply(erasing_channel(2, 1), rho, ("A",))
        assert np.allclose(out.entries, np.diag([0.0, 1.0]), atol=1e-12)

    def test_kraus_list_d3_target2(self):
        ch = erasing_channel(3, 2)
        assert ch.n_kraus == 3
        for i, k in enumerate(ch.kraus):
            expected = np.zeros((3, 3))
            expected[2, i] = 1.0
            assert np.array_equal(k, expected)

    def test_target_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            erasing_channel(3, 3)

    def test_idempotent(self, rng):
        ch = erasing_channel(2, 1)
        rho = random_density(2, rng)
        once = apply(ch, rho, ("A",))
        twice = apply(ch, once, ("A",))
        assert np.abs(once.entries - twice.entries).max() < 1e-12


class TestVacuumExtend:
    def test_realized_operators_for_erasing_to_0(self):
        ext = vacuum_extend(erasing_channel(2, 0), [1.0, 0.0])
        e0 = np.zeros((3, 3))
        e0[0, 0] = 1.0
        e0[2, 2] = 1.0
        e1 = np.zeros((3, 3))
        e1[0, 1] = 1.0
        assert np.array_equal(ext.realized.kraus[0], e0)
        assert np.array_equal(ext.realized.kraus[1], e1)

    def test_realized_operators_for_erasing_to_1(self):
        ext = vacuum_extend(erasing_channel(2, 1), [0.0, 1.0])
        f0 = np.zeros((3, 3))
        f0[1, 0] = 1.0
        f1 = np.zeros((3, 3))
        f1[1, 1] = 1.0
        f1[2, 2] = 1.0
        assert np.array_equal(ext.realized.kraus[0], f0)
        assert np.array_equal(ext.realized.kraus[1], f1)

    def test_vacuum_is_fixed_point(self, rng):
        a = rng.normal(size=3) + 1j * rng.normal(size=3)
        a /= np.linalg.norm(a)
        ch = erasing_channel(3, 1)
        ext = vacuum_extend(ch, a)
        triv = basis_ket(4, 3).density(SubsystemLayout((4,), ("T",)))
        out = apply(ext.realized, triv, ("T",))
        assert np.abs(out.entries - triv.entries).max() < 1e-12

    def test_extension_is_not_erasing_on_larger_space(self):
        # unlike the base channel, the extension has no fixed output state
        ext = vacuum_extend(erasing_channel(2, 0), [1.0, 0.0])
        layout = SubsystemLayout((3,), ("T",))
        out_a = apply(ext.realized, basis_ket(3, 0).density(layout), ("T",))
        out_b = apply(ext.realized, basis_ket(3, 2).density(layout), ("T",))
        assert np.abs(out_a.entries - out_b.entries).max() > 0.5

    def test_normalization_enforced(self):
        with pytest.raises(ValueError, match="norm"):
            vacuum_extend(erasing_channel(2, 0), [1.0, 1.0])
        with pytest.raises(ValueError, match="amplitudes"):
            vacuum_extend(erasing_channel(2, 0), [1.0])


class TestCanonicalize:
    def test_fixed_point(self):
        ext = vacuum_extend(erasing_channel(2, 0), [1.0, 0.0])
        canon = canonicalize_extension(ext)
        assert np.allclose(canon.amplitudes, [1.0, 0.0])
        dist = np.linalg.norm(choi(canon.realized).entries - choi(ext.realized).entries)
        assert dist < 1e-12

    @pytest.mark.parametrize(
        "alpha",
        [
            [1 / np.sqrt(2), 1 / np.sqrt(2)],
            [0.0, 1.0],
            [0.6, 0.8j],
        ],
    )
    def test_choi_preserved_and_amplitudes_reset(self, alpha):
        ext = vacuum_extend(erasing_channel(2, 0), alpha)
        canon = canonicalize_extension(ext)
        assert np.allclose(canon.amplitudes, [1.0, 0.0], atol=1e-12)
        dist = np.linalg.norm(choi(canon.realized).entries - choi(ext.realized).entries)
        assert dist < 1e-10

    def test_random_amplitudes_many_kraus(self, rng):
        base = erasing_channel(4, 2)
        for _ in range(10):
            a = rng.normal(size=4) + 1j * rng.normal(size=4)
            a /= np.linalg.norm(a)
            ext = vacuum_extend(base, a)
            canon = canonicalize_extension(ext)
            assert np.allclose(canon.amplitudes, [1, 0, 0, 0], atol=1e-12)
            dist = np.linalg.norm(choi(canon.realized).entries - choi(ext.realized).entries)
            assert dist < 1e-10


class TestApply:
    def test_identity_channel(self, rng):
        rho = random_density(4, rng, SubsystemLayout((2, 2), ("A", "B")))
        out = apply(identity_channel(4), rho, ("A", "B"))
        assert np.abs(out.entries - rho.entries).max() < 1e-12

    def test_erase_half_of_bell_pair(self):
        layout = SubsystemLayout((2, 2), ("A", "C"))
        rho = maximally_entangled_ket(2).density(layout)
        out = apply(erasing_channel(2, 0), rho, ("A",))
        kraus = erasing_channel(2, 0).kraus
        full = [np.kron(k, np.eye(2)) for k in kraus]
        oracle = oracle_apply(full, rho.entries)
        assert np.abs(out.entries - oracle).max() < 1e-14
        expected = np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2)
        assert np.allclose(out.entries, expected, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        rho = random_density(4, rng, SubsystemLayout((2, 2), ("A", "B")))
        with pytest.raises(ValueError, match="dimension"):
            apply(erasing_channel(3, 0), rho, ("A",))

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_trace_preserved_on_random_states(self, d, rng):
        chans = [erasing_channel(d, d - 1), identity_channel(d)]
        layout = SubsystemLayout((d,), ("A",))
        for ch in chans:
            for _ in range(200):
                rho = random_density(d, rng, layout)
                out = apply(ch, rho, ("A",))
                assert abs(np.trace(out.entries) - 1.0) <= 1e-10


class TestChoi:
    def test_identity_channel_choi(self):
        c = choi(identity_channel(2))
        phi = maximally_entangled_ket(2).amplitudes
        assert np.allclose(c.entries, 2.0 * np.outer(phi, phi.conj()), atol=1e-12)

    def test_erasing_choi_matches_oracle(self):
        ch = erasing_channel(2, 0)
        c = choi(ch)
        oracle = oracle_choi(ch.kraus, 2, 2)
        assert np.abs(c.entries - oracle).max() < 1e-14

    def test_representation_independence(self, rng):
        ch = erasing_channel(3, 1)
        u = random_unitary(3, rng)
        mixed = remix(ch, u)
        dist = np.linalg.norm(choi(ch).entries - choi(mixed).entries)
        assert dist < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_choi_positive_and_unit_marginal(self, d):
        for ch in (erasing_channel(d, 0), identity_channel(d)):
            c = choi(ch)
            assert np.linalg.eigvalsh(c.entries)[0] >= -1e-10
            assert abs(np.trace(c.entries) - d) < 1e-10


class TestChannelEquality:
    def test_self_equal(self):
        ch = erasing_channel(2, 0)
        cmp = channels_equal(ch, ch)
        assert cmp.equal and cmp.distance == 0.0

    def test_different_erasing_channels(self):
        a, b = erasing_channel(2, 0), erasing_channel(2, 1)
        oracle = np.linalg.norm(oracle_choi(a.kraus, 2, 2) - oracle_choi(b.kraus, 2, 2))
        cmp = channels_equal(a, b)
        assert not cmp.equal
        assert cmp.distance > 1.0
        assert abs(cmp.distance - oracle) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            channels_equal(erasing_channel(2, 0), erasing_channel(3, 0))

    def test_distance_always_reported(self, rng):
        ch = erasing_channel(2, 0)
        mixed = remix(ch, random_unitary(2, rng))
        cmp = channels_equal(ch, mixed, tol=1e-10)
        assert cmp.equal
        assert cmp.distance >= 0.0
        assert cmp.tol == 1e-10
