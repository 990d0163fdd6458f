import numpy as np
import pytest

from spikedcov import numkernel
from spikedcov.numkernel import RngStream


class TestRngStream:
    def test_same_key_reproduces(self):
        a = RngStream(12, 3).generator().standard_normal(16)
        b = RngStream(12, 3).generator().standard_normal(16)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(12, 3).generator().standard_normal(16)
        b = RngStream(12, 4).generator().standard_normal(16)
        c = RngStream(13, 3).generator().standard_normal(16)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_generator_restarts_each_call(self):
        stream = RngStream(7, 0)
        first = stream.generator().standard_normal(4)
        again = stream.generator().standard_normal(4)
        assert np.array_equal(first, again)

    def test_rejects_negative_key(self):
        with pytest.raises(ValueError):
            RngStream(-1, 0)
        with pytest.raises(ValueError):
            RngStream(0, -1)

    def test_default_index(self):
        assert RngStream(5).stream_index == 0


class TestCheckSymmetric:
    def test_accepts_symmetric(self):
        s = np.array([[2.0, 1.0], [1.0, 3.0]])
        out = numkernel.check_symmetric(s)
        assert np.array_equal(out, s)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="not symmetric"):
            numkernel.check_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonsquare_and_nonfinite(self):
        with pytest.raises(ValueError):
            numkernel.check_symmetric(np.ones((2, 3)))
        with pytest.raises(ValueError):
            numkernel.check_symmetric(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestSymEig:
    def test_descending_and_reconstructs(self):
        rng = np.random.default_rng(0)
        g = rng.standard_normal((8, 8))
        s = g @ g.T
        w, v = numkernel.sym_eig(s)
        assert np.all(np.diff(w) <= 0)
        assert np.allclose((v * w) @ v.T, s, atol=1e-10)
        assert np.allclose(v.T @ v, np.eye(8), atol=1e-12)


class TestPsdSqrt:
    def test_root_squares_back(self):
        rng = np.random.default_rng(1)
        g = rng.standard_normal((6, 6))
        s = g @ g.T
        r = numkernel.psd_sqrt(s)
        assert np.allclose(r @ r, s, atol=1e-10)
        assert np.allclose(r, r.T)

    def test_clamps_roundoff_negative(self):
        v = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
        s = v @ v.T
        s[0, 1] = s[1, 0] = s[0, 1] + 1e-17
        r = numkernel.psd_sqrt(s)
        assert np.all(np.isfinite(r))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="indefinite"):
            numkernel.psd_sqrt(np.diag([1.0, -0.5]))


class TestSvdFull:
    def test_reconstructs_with_descending_values(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((7, 7))
        trip = numkernel.svd_full(a)
        assert np.all(np.diff(trip.s) <= 0)
        assert np.allclose((trip.u * trip.s) @ trip.v.T, a, atol=1e-10)

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((5, 5))
        trip = numkernel.svd_full(a)
        for j in range(5):
            i = int(np.argmax(np.abs(trip.u[:, j])))
            assert trip.u[i, j] > 0.0

    def test_deterministic_under_column_flip_of_input_factors(self):
        a = np.diag([3.0, 2.0])
        trip = numkernel.svd_full(a)
        assert np.allclose(trip.u, np.eye(2))
        assert np.allclose(trip.v, np.eye(2))
        assert np.allclose(trip.s, [3.0, 2.0])

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            numkernel.svd_full(np.ones((2, 3)))


class TestHaarOrthogonal:
    def test_orthogonal_and_deterministic(self):
        q1 = numkernel.random_orthogonal(10, RngStream(42, 1))
        q2 = numkernel.random_orthogonal(10, RngStream(42, 1))
        assert np.array_equal(q1, q2)
        assert np.allclose(q1.T @ q1, np.eye(10), atol=1e-12)

    def test_advances_shared_generator(self):
        gen = RngStream(9, 0).generator()
        q1 = numkernel.haar_orthogonal(4, gen)
        q2 = numkernel.haar_orthogonal(4, gen)
        assert not np.array_equal(q1, q2)
        assert np.allclose(q2.T @ q2, np.eye(4), atol=1e-12)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            numkernel.haar_orthogonal(0, RngStream(0).generator())

    def test_rotation_invariance_of_first_column_mean(self):
        # Haar columns are uniform on the sphere: the first coordinate of the
        # first column has mean 0 and variance 1/p.
        p, reps = 5, 4000
        gen = RngStream(100, 0).generator()
        vals = np.array([numkernel.haar_orthogonal(p, gen)[0, 0] for _ in range(reps)])
        assert abs(vals.mean()) < 5.0 / np.sqrt(reps * (1.0 / p))
        assert abs(vals.var() - 1.0 / p) < 0.02
