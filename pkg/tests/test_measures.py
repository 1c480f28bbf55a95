import math
from itertools import product as iproduct

import numpy as np
import pytest

import finconv as fc
from finconv import catalog
from finconv.errors import MeasureError, NotCertifiedError, StructureMismatchError
from helpers import (
    certified,
    cyclic_exp_oracle,
    direct_series_exp,
    iterative_power,
    random_formula,
    random_measure,
    random_semigroup,
)


# --- constructors -------------------------------------------------------------

def test_dirac_basic(c2):
    assert fc.dirac(c2, 0).weights.tolist() == [1.0, 0.0]
    with pytest.raises(MeasureError):
        fc.dirac(c2, 2)


def test_dirac_event_indicator():
    rng = np.random.default_rng(21)
    for _ in range(100):
        s = random_semigroup(rng, max_m=6)
        f = random_formula(rng, s)
        event = fc.definable_set(s, f, "x")
        a = int(rng.integers(s.size))
        expected = 1.0 if event[a] else 0.0
        assert fc.measure_of_event(fc.dirac(s, a), event) == expected


def test_measure_validation(c2):
    with pytest.raises(MeasureError):
        fc.measure(c2, [0.7, -0.3])
    with pytest.raises(MeasureError):
        fc.measure(c2, [0.7, 0.2])
    mu = fc.measure(c2, [0.5 + 2e-10, 0.5])
    assert math.fsum(mu.weights.tolist()) == pytest.approx(1.0, abs=1e-15)


def test_mix_examples(c2):
    d0, d1 = fc.dirac(c2, 0), fc.dirac(c2, 1)
    assert fc.mix([0.5, 0.5], [d0, d1]).weights.tolist() == [0.5, 0.5]
    mu = fc.measure(c2, [0.25, 0.75])
    assert fc.mix([1.0], [mu]).weights.tolist() == mu.weights.tolist()
    assert fc.mix([0.3, 0.7], [d0, d1]).weights.tolist() == pytest.approx([0.3, 0.7], abs=1e-15)


def test_mix_errors(c2, j2):
    d0 = fc.dirac(c2, 0)
    with pytest.raises(MeasureError):
        fc.mix([0.5, 0.5], [d0])
    with pytest.raises(StructureMismatchError):
        fc.mix([0.5, 0.5], [d0, fc.dirac(j2, 0)])
    with pytest.raises(MeasureError):
        fc.mix([1.5, -0.5], [d0, d0])


# --- convolution ----------------------------------------------------------------

def test_convolve_point_masses(c2):
    out = fc.convolve(fc.dirac(c2, 1), fc.dirac(c2, 1))
    assert out.weights.tolist() == [1.0, 0.0]


def test_convolve_neutral_is_identity():
    rng = np.random.default_rng(3)
    for _ in range(30):
        s = random_semigroup(rng, max_m=12)
        mu = random_measure(s, rng)
        out = fc.convolve(mu, fc.dirac(s, s.certificate.zero))
        assert np.abs(out.weights - mu.weights).max() <= 1e-15


def test_convolve_square_on_chain(j2):
    mu = fc.measure(j2, [0.4, 0.6])
    out = fc.convolve(mu, mu)
    assert out.weights == pytest.approx([0.16, 0.84], abs=1e-15)


def test_convolve_matches_integral_over_translates():
    # (mu * nu)(E) equals the nu-average of mu over the preimages of E
    # under translation, which is how the product is defined on events
    rng = np.random.default_rng(29)
    for _ in range(50):
        s = random_semigroup(rng, max_m=10)
        table = s.certificate.add_table
        mu, nu = random_measure(s, rng), random_measure(s, rng)
        event = rng.random(s.size) < 0.5
        direct = fc.measure_of_event(fc.convolve(mu, nu), event)
        averaged = math.fsum(
            float(nu.weights[y]) * fc.measure_of_event(mu, event[table[:, y]])
            for y in range(s.size)
        )
        assert direct == pytest.approx(averaged, abs=1e-12)


def test_convolve_requires_certificate():
    s = catalog.cyclic_group(3)  # not yet verified
    mu = fc.measure(s, [0.2, 0.3, 0.5])
    with pytest.raises(NotCertifiedError):
        fc.convolve(mu, mu)


def test_convolve_structure_mismatch(c2, j2):
    with pytest.raises(StructureMismatchError):
        fc.convolve(fc.dirac(c2, 0), fc.dirac(j2, 0))


def test_translate(c2, j2):
    mu = fc.measure(c2, [0.3, 0.7])
    assert fc.translate(mu, 1).weights == pytest.approx([0.7, 0.3], abs=1e-15)
    assert fc.translate(mu, 0).weights.tolist() == mu.weights.tolist()
    rng = np.random.default_rng(8)
    for _ in range(10):
        nu = random_measure(j2, rng)
        assert fc.tv_distance(fc.translate(nu, 1), fc.dirac(j2, 1)) <= 1e-15
    for _ in range(10):
        s = random_semigroup(rng, max_m=9)
        nu = random_measure(s, rng)
        a = int(rng.integers(s.size))
        direct = fc.convolve(nu, fc.dirac(s, a))
        assert fc.tv_distance(fc.translate(nu, a), direct) <= 1e-15


def test_conv_power_examples(c2, j2):
    mu = fc.measure(c2, [0.5, 0.5])
    assert fc.conv_power(mu, 0).weights.tolist() == [1.0, 0.0]
    for n in range(1, 11):
        assert fc.conv_power(mu, n).weights == pytest.approx([0.5, 0.5], abs=1e-15)
        brute = iterative_power(mu, n)
        assert fc.tv_distance(fc.conv_power(mu, n), brute) <= 1e-14
    half = fc.measure(j2, [0.5, 0.5])
    assert fc.conv_power(half, 2).weights == pytest.approx([0.25, 0.75], abs=1e-15)
    with pytest.raises(MeasureError):
        fc.conv_power(mu, -1)


def test_conv_power_matches_iteration_on_zoo():
    rng = np.random.default_rng(17)
    for _ in range(25):
        s = random_semigroup(rng, max_m=10)
        mu = random_measure(s, rng)
        n = int(rng.integers(0, 9))
        assert fc.tv_distance(fc.conv_power(mu, n), iterative_power(mu, n)) <= 1e-13


# --- exponentials -----------------------------------------------------------------

def test_conv_exp_rate_zero(z8):
    rng = np.random.default_rng(1)
    mu = random_measure(z8, rng)
    assert fc.conv_exp(mu, 0.0, 1e-9).weights.tolist() == fc.dirac(z8, 0).weights.tolist()


def test_conv_exp_analytic_c2(c2):
    out = fc.conv_exp(fc.dirac(c2, 1), 1.0, 1e-9)
    expected = (math.exp(-1) * math.cosh(1), math.exp(-1) * math.sinh(1))
    assert out.weights == pytest.approx(expected, abs=1e-9)
    series = direct_series_exp(fc.dirac(c2, 1), 1.0)
    assert out.weights == pytest.approx(series, abs=1e-9)


def test_conv_exp_closed_form_chain(j2):
    r = math.log(2)
    out = fc.conv_exp(fc.dirac(j2, 1), r, 1e-9)
    assert out.weights == pytest.approx([0.5, 0.5], abs=1e-9)


def test_conv_exp_parameter_errors(c2):
    d1 = fc.dirac(c2, 1)
    with pytest.raises(MeasureError):
        fc.conv_exp(d1, -0.5, 1e-9)
    with pytest.raises(MeasureError):
        fc.conv_exp(d1, 1.0, 0.0)


def test_conv_exp_truncation_meets_tolerance(z8):
    rng = np.random.default_rng(4)
    mu = random_measure(z8, rng)
    for tol in (1e-6, 1e-9, 1e-12):
        out = fc.conv_exp(mu, 2.0, tol)
        reference = direct_series_exp(mu, 2.0, terms=120)
        assert 0.5 * np.abs(out.weights - reference).sum() <= tol


def test_conv_exp_squaring_flag(z8):
    rng = np.random.default_rng(14)
    mu = random_measure(z8, rng)
    for r in (0.5, 2.0, 7.5):
        a = fc.conv_exp(mu, r, 1e-10, method="series")
        b = fc.conv_exp(mu, r, 1e-10, method="squaring")
        assert fc.tv_distance(a, b) <= 2e-10


def test_conv_exp_character_transform_oracle():
    for m in (2, 4, 8):
        s = certified(catalog.cyclic_group(m))
        rng = np.random.default_rng(m)
        mu = random_measure(s, rng)
        for r in (0.5, 1.0, 2.0):
            ours = fc.conv_exp(mu, r, 1e-12)
            oracle = cyclic_exp_oracle(mu, r)
            assert fc.tv_distance(ours, oracle) <= 1e-9


# --- metric and events ----------------------------------------------------------

def test_tv_examples(c2):
    mu = fc.measure(c2, [0.5, 0.5])
    assert fc.tv_distance(mu, mu) == 0.0
    assert fc.tv_distance(fc.dirac(c2, 0), fc.dirac(c2, 1)) == 1.0
    nu = fc.measure(c2, [0.6, 0.4])
    assert fc.tv_distance(mu, nu) == pytest.approx(0.1, abs=1e-15)


def test_measure_of_event_bounds(z8):
    rng = np.random.default_rng(2)
    mu = random_measure(z8, rng)
    assert fc.measure_of_event(mu, np.ones(8, dtype=bool)) == pytest.approx(1.0, abs=1e-15)
    assert fc.measure_of_event(mu, np.zeros(8, dtype=bool)) == 0.0


def test_tv_equals_supremum_over_events():
    rng = np.random.default_rng(23)
    for _ in range(20):
        s = random_semigroup(rng, max_m=8)
        mu, nu = random_measure(s, rng), random_measure(s, rng)
        eps = fc.tv_distance(mu, nu)
        worst = 0.0
        for bits in iproduct([False, True], repeat=s.size):
            event = np.array(bits)
            p, q = fc.measure_of_event(mu, event), fc.measure_of_event(nu, event)
            comp_p = fc.measure_of_event(mu, ~event)
            comp_q = fc.measure_of_event(nu, ~event)
            # complement identity, hence one-sided bounds are two-sided
            assert p - q == pytest.approx(comp_q - comp_p, abs=1e-12)
            assert p <= q + eps + 1e-12
            worst = max(worst, p - q)
        assert worst == pytest.approx(eps, abs=1e-12)


# --- algebra laws over the zoo ----------------------------------------------------

def test_simplex_preservation():
    rng = np.random.default_rng(31)
    count = 0
    while count < 1000:
        s = random_semigroup(rng, max_m=16)
        mu, nu = random_measure(s, rng), random_measure(s, rng)
        outs = [
            fc.convolve(mu, nu),
            fc.conv_power(mu, int(rng.integers(0, 6))),
            fc.conv_exp(mu, float(rng.uniform(0, 2)), 1e-9),
            fc.mix([0.25, 0.75], [mu, nu]),
        ]
        for out in outs:
            assert (out.weights >= 0).all()
            assert abs(math.fsum(out.weights.tolist()) - 1.0) <= 1e-12
        count += len(outs)


def test_commutativity_coordinatewise():
    rng = np.random.default_rng(32)
    for _ in range(200):
        s = random_semigroup(rng, max_m=16)
        mu, nu = random_measure(s, rng), random_measure(s, rng)
        a = fc.convolve(mu, nu).weights
        b = fc.convolve(nu, mu).weights
        assert np.abs(a - b).max() <= 1e-12


def test_associativity():
    rng = np.random.default_rng(33)
    for _ in range(200):
        s = random_semigroup(rng, max_m=16)
        mu, nu, lam = (random_measure(s, rng) for _ in range(3))
        left = fc.convolve(fc.convolve(mu, nu), lam)
        right = fc.convolve(mu, fc.convolve(nu, lam))
        assert fc.tv_distance(left, right) <= 1e-12


def test_distributivity_over_mixtures():
    rng = np.random.default_rng(34)
    for _ in range(200):
        s = random_semigroup(rng, max_m=16)
        mu, nu, lam = (random_measure(s, rng) for _ in range(3))
        r = float(rng.uniform())
        left = fc.convolve(fc.mix([r, 1 - r], [mu, nu]), lam)
        right = fc.mix([r, 1 - r], [fc.convolve(mu, lam), fc.convolve(nu, lam)])
        assert fc.tv_distance(left, right) <= 1e-12


def test_exponential_semigroup_law(z8):
    tol = 1e-9
    rng = np.random.default_rng(35)
    mu = random_measure(z8, rng)
    for r, s_rate in iproduct((0.0, 0.5, 1.0, 2.0), repeat=2):
        left = fc.convolve(fc.conv_exp(mu, r, tol), fc.conv_exp(mu, s_rate, tol))
        right = fc.conv_exp(mu, r + s_rate, tol)
        assert fc.tv_distance(left, right) <= 2 * tol


def test_exponential_root_law(j3):
    tol = 1e-9
    rng = np.random.default_rng(36)
    mu = random_measure(j3, rng)
    for n in (2, 3, 4, 8):
        for r in (0.5, 1.0, 2.0):
            root = fc.conv_exp(mu, r / n, tol)
            assert fc.tv_distance(fc.conv_power(root, n), fc.conv_exp(mu, r, tol)) <= (n + 1) * tol


def test_degenerate_single_element():
    s = certified(catalog.cyclic_group(1))
    mu = fc.measure(s, [1.0])
    assert fc.convolve(mu, mu).weights.tolist() == [1.0]
    assert fc.conv_power(mu, 7).weights.tolist() == [1.0]
    assert fc.conv_exp(mu, 3.0, 1e-9).weights.tolist() == [1.0]
    assert fc.tv_distance(mu, fc.dirac(s, 0)) == 0.0
