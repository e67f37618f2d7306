import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.spatial import cKDTree

from halfspace_depth import asymptotics as A
from halfspace_depth.distributions import (
    Cauchy2D,
    StdGaussian2D,
    UniformDisk,
    UniformSquare,
    disk_level_radius,
)

from oracles import bisect

DISK, SQUARE, GAUSS, CAUCHY = UniformDisk(), UniformSquare(), StdGaussian2D(), Cauchy2D()


def r_star(alpha=0.25):
    return bisect(lambda r: math.asin(r) + r * math.sqrt(1 - r * r) - (math.pi / 2 - math.pi * alpha), 0.0, 1.0)


class TestRates:
    def test_lambda(self):
        assert A.lambda_n(16) == pytest.approx(math.sqrt(2 * math.log(math.log(16)) / 16), rel=1e-15)
        n = np.arange(10, 5000)
        assert np.all(np.diff(A.lambda_n(n)) < 0)
        for k in (3, 100, 10**6):
            assert A.lambda_n(k) * math.sqrt(k / (2 * math.log(math.log(k)))) == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(ValueError):
            A.lambda_n(2)

    def test_mz(self):
        assert A.mz_rate(1000, 1.0) == 1.0
        assert A.mz_rate(10**4, 1.5) == pytest.approx(10 ** (4 * (-1 / 3)))
        with pytest.raises(ValueError):
            A.mz_rate(10, 2.0)
        seq = A.RateSequence("mz", 1.5)
        assert seq(100) == A.mz_rate(100, 1.5)
        assert A.RateSequence()(100) == A.lambda_n(100)
        with pytest.raises(ValueError):
            A.RateSequence("mz")


class TestEnvelope:
    def test_examples(self):
        assert A.envelope(1, 0.5) == 0.5
        assert A.envelope(2, 0.25) == pytest.approx(math.sqrt(7) / 4)
        assert A.envelope(1.5, 0) == 0
        with pytest.raises(ValueError):
            A.envelope(1, 1.5)

    @settings(max_examples=200)
    @given(st.integers(2**20, 2**21), st.integers(0, 2**20))
    def test_symmetry(self, Mk, mk):
        # dyadic inputs keep M - m exact, so the identity holds bit for bit
        M, m = Mk / 2**20, mk / 2**20
        if 0 <= M - m <= 1:
            assert A.envelope(M, m) == A.envelope(M, M - m)

    @settings(max_examples=100)
    @given(st.floats(1.0, 2.0), st.floats(0.0, 1.0))
    def test_symmetry_floats(self, M, m):
        if 0 <= M - m <= 1:
            assert A.envelope(M, m) == pytest.approx(A.envelope(M, M - m), rel=1e-12, abs=1e-7)  # sqrt near a zero radicand


class TestConstants:
    def test_square(self):
        c = A.lil_constant(SQUARE, 0.25, 1.0)
        assert c.value == pytest.approx(math.sqrt(3) / 4, abs=1e-12)
        assert c.value == pytest.approx(0.5 * math.sqrt(1 - 0.25), abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
    @pytest.mark.parametrize("M", [1.0, 2.0])
    def test_gauss(self, alpha, M):
        q = stats.norm.ppf(1 - alpha)
        want = math.sqrt(2 * math.pi * (M * alpha - alpha**2)) * math.exp(q * q / 2)
        assert A.lil_constant(GAUSS, alpha, M).value == pytest.approx(want, rel=1e-9)

    @pytest.mark.parametrize("M", [1.0, 2.0])
    def test_disk(self, M):
        r = r_star()
        want = math.pi / 2 * math.sqrt((M * 0.25 - 0.0625) / (1 - r * r))
        assert A.lil_constant(DISK, 0.25, M).value == pytest.approx(want, rel=1e-9)

    def test_cauchy_is_a_bracket(self):
        c = A.lil_constant(CAUCHY, 0.25, 1.0)
        assert not c.is_exact
        lo = math.pi * math.sqrt(0.25 - 0.0625) / math.sin(math.pi / 4) ** 2
        assert (c.lower, c.upper) == pytest.approx((lo, math.sqrt(2) * lo))
        assert c.to_dict()["constant"] == [c.lower, c.upper]

    def test_to_dict(self):
        d = A.lil_constant(SQUARE, 0.25, 1.0).to_dict()
        assert list(d) == ["distribution", "alpha", "M", "constant", "min_radon"]

    def test_rejects(self):
        with pytest.raises(ValueError):
            A.lil_constant(SQUARE, 0.5, 1.0)
        with pytest.raises(ValueError):
            A.lil_constant(SQUARE, 0.25, 0.5)

    def test_disk_constant_shape(self):
        a = np.linspace(0.01, 0.49, 97)
        c = np.array([A.lil_constant(DISK, x, 1.0).value for x in a])
        assert np.all(np.isfinite(c)) and np.all(c > 0)
        assert np.max(np.abs(np.diff(c))) < 0.05  # no jumps on a fine grid
        # rises all the way to pi/4: both alpha - alpha^2 and 1 - r(alpha)^2 grow
        assert np.all(np.diff(c) > 0)
        assert A.lil_constant(DISK, 0.4999, 1.0).value == pytest.approx(math.pi / 4, rel=1e-6)


def angular_bumps(rng, k=4, amp=0.02, width=0.35):
    centres = rng.uniform(0, 2 * np.pi, k)
    heights = amp * rng.uniform(0.3, 1.0, k) * rng.choice([-1.0, 1.0], k)

    def b(theta):
        d = np.angle(np.exp(1j * (np.asarray(theta)[..., None] - centres)))
        return (heights * np.exp(-((d / width) ** 2))).sum(-1)

    return b


def star_region(alpha, b, k=20000):
    """Boundary of cl{x : D(x) >= alpha + b(angle x)} for the unit disk."""
    th = 2 * np.pi * np.arange(k) / k
    r = np.array([disk_level_radius(alpha + v) for v in b(th)])
    return th, r


def star_hausdorff(s1, s2):
    """Hausdorff distance of two star-shaped compact sets given by boundary radii."""
    th, r1 = s1
    _, r2 = s2
    p1 = np.column_stack([r1 * np.cos(th), r1 * np.sin(th)])
    p2 = np.column_stack([r2 * np.cos(th), r2 * np.sin(th)])
    out = 0.0
    # a boundary point of one set outside the other is measured to its boundary
    for pa, ra, pb, rb, tree in ((p1, r1, p2, r2, cKDTree(p2)), (p2, r2, p1, r1, cKDTree(p1))):
        outside = ra > rb + 1e-15
        if outside.any():
            out = max(out, float(tree.query(pa[outside])[0].max()))
    return out


class TestPerturbedRegions:
    @pytest.mark.parametrize("seed", range(5))
    def test_two_phi_decomposition(self, seed):
        rng = np.random.default_rng(seed)
        b = angular_bumps(rng)
        base = star_region(0.25, lambda t: np.zeros_like(t))
        both = star_region(0.25, b)
        pos = star_region(0.25, lambda t: np.maximum(b(t), 0))
        neg = star_region(0.25, lambda t: np.minimum(b(t), 0))  # the set for -phi_-
        lhs = star_hausdorff(both, base)
        rhs = max(star_hausdorff(pos, base), star_hausdorff(neg, base))
        assert lhs == pytest.approx(rhs, abs=1e-3)

    @pytest.mark.parametrize("seed", range(3))
    def test_phi_prime_is_the_derivative(self, seed):
        rng = np.random.default_rng(10 + seed)
        b = angular_bumps(rng, amp=1.0)
        t = 1e-3
        base = star_region(0.25, lambda x: np.zeros_like(x))
        moved = star_region(0.25, lambda x: t * b(x))
        fd = star_hausdorff(moved, base) / t
        pp = A.phi_prime(DISK, 0.25, lambda x: b(np.arctan2(x[:, 1], x[:, 0])), resolution=4096)
        assert fd == pytest.approx(pp, rel=2e-2)


class TestPhiPrime:
    def test_zero(self):
        assert A.phi_prime(DISK, 0.25, lambda x: np.zeros(len(x))) == 0.0

    def test_constant(self):
        r = r_star()
        want = 0.7 / (2 * math.sqrt(1 - r * r) / math.pi)
        assert A.phi_prime(DISK, 0.25, 0.7) == pytest.approx(want, rel=1e-9)

    def test_arc_indicator(self):
        arc = lambda x: (np.arctan2(x[:, 1], x[:, 0]) > 0.5).astype(float)  # noqa: E731
        assert A.phi_prime(DISK, 0.25, arc) == pytest.approx(A.phi_prime(DISK, 0.25, 1.0), rel=1e-9)

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            A.phi_prime(DISK, 0.25, 1.0, resolution=32)

    def test_vanishing_density_signalled(self):
        class Flat(UniformDisk):
            def radon(self, x, u):
                return np.zeros(len(np.atleast_2d(x)))

        with pytest.raises(ValueError):
            A.phi_prime(Flat(), 0.25, 1.0)


class TestHausdorffRate:
    @pytest.mark.parametrize("d", [DISK, GAUSS, SQUARE, CAUCHY], ids=["disk", "gauss", "square", "cauchy"])
    def test_limit(self, d):
        assert A.hausdorff_rate(d, 0.25, 1e-3) == pytest.approx(A.hausdorff_rate_limit(d, 0.25), rel=2e-2)

    def test_limits_from_oracles(self):
        r = r_star()
        assert A.hausdorff_rate_limit(DISK, 0.25) == pytest.approx(math.pi / (2 * math.sqrt(1 - r * r)), rel=1e-10)
        q = stats.norm.ppf(0.75)
        assert A.hausdorff_rate_limit(GAUSS, 0.25) == pytest.approx(math.sqrt(2 * math.pi) * math.exp(q * q / 2), rel=1e-10)
        assert A.hausdorff_rate_limit(CAUCHY, 0.25) == pytest.approx(2 * math.sqrt(2) * math.pi)
        assert A.hausdorff_rate_limit(SQUARE, 0.25) == pytest.approx(1.0)

    @pytest.mark.parametrize("d", [DISK, GAUSS], ids=["disk", "gauss"])
    def test_two_sided(self, d):
        assert A.hausdorff_rate(d, 0.25, 1e-3) == pytest.approx(A.hausdorff_rate(d, 0.25, -1e-3), rel=1e-2)

    def test_richardson(self):
        est = A.richardson_rate(DISK, 0.25, 1e-3)
        assert est.stable

    def test_square_localisation(self):
        a = 0.25
        pts = A.localization_points(SQUARE, a)
        assert np.allclose(SQUARE.depth(pts), a)
        assert A.localization_points(DISK, a) is None
        with pytest.raises(ValueError):
            A.hausdorff_rate(DISK, a, 1e-3, localized=True)

    def test_rejects(self):
        with pytest.raises(ValueError):
            A.hausdorff_rate(DISK, 0.25, 0.0)
        with pytest.raises(ValueError):
            A.hausdorff_rate(DISK, 0.45, 0.1)


class TestVarpi:
    def test_ball_grid(self):
        g = A.ball_grid((1.0, 2.0), 0.1)
        assert g.shape == (4096, 2)
        assert np.max(np.hypot(g[:, 0] - 1, g[:, 1] - 2)) == pytest.approx(0.1)

    def test_vanishes_with_radius(self):
        x = np.array([0.3, 0.1])
        vals = [A.varpi(DISK, x, r) for r in (1e-2, 1e-3, 1e-4)]
        assert vals[0] > vals[1] > vals[2] > 0

    @pytest.mark.parametrize("sign", [1, -1])
    def test_slope_is_radon(self, sign):
        r0 = disk_level_radius(0.25)
        for th in np.linspace(0, 2 * np.pi, 8, endpoint=False):
            x = r0 * np.array([math.cos(th), math.sin(th)])
            ux = x / r0
            slope = A.varpi(DISK, x, 1e-3, sign) / 1e-3
            assert slope == pytest.approx(sign * float(DISK.radon(x, ux)), abs=1e-2)

    def test_leaving_support(self):
        with pytest.raises(ValueError):
            A.varpi(DISK, np.array([0.999, 0.0]), 0.01)
        with pytest.raises(ValueError):
            A.varpi(DISK, np.zeros(2), 0.01, sign=0)
