import math
import random

import pytest
from scipy.integrate import quad

from dartsketch import analysis


# ----------------------------------------------------------------- closed forms


def test_kappa_pcsa_examples():
    assert analysis.kappa_pcsa(math.e) == 1.0
    assert analysis.kappa_pcsa(2.0) == pytest.approx(1.0 / math.log(2.0), rel=1e-15)
    qs = [1.5, 2.0, 4.0, 16.0, 256.0]
    vals = [analysis.kappa_pcsa(q) for q in qs]
    assert all(a > b for a, b in zip(vals, vals[1:]))  # decreasing toward 0
    assert vals[-1] < 0.2


def test_kappa_loglog_examples():
    assert analysis.kappa_loglog(2.0) == pytest.approx(1.0 / (2.0 * math.log(2.0)), rel=1e-15)
    assert analysis.kappa_loglog(1.0 + 1e-9) == pytest.approx(1.0, abs=1e-6)
    for q in (1.2, 2.0, 2.91, math.e, 7.0):
        assert analysis.kappa_loglog(q) < analysis.kappa_pcsa(q)


def test_kappa_curtain_limits_and_value():
    q = 2.5
    # an unbounded window tracks every sub-curtain cell: the PCSA limit
    assert analysis.kappa_curtain(q, a=40, h=60) == pytest.approx(
        analysis.kappa_pcsa(q), rel=1e-9
    )
    # no window plus unconstrained offsets leaves only the column maxima
    assert analysis.kappa_curtain(q, a=40, h=0) == pytest.approx(
        analysis.kappa_loglog(q), rel=1e-9
    )
    kappa = analysis.kappa_curtain(2.91, 2, 1)
    mvp = (math.log2(4) + 1) / (2 * kappa)
    assert mvp == pytest.approx(2.31, abs=0.01)


def test_kappa_mincount():
    assert analysis.kappa_mincount(3) == 3.0
    with pytest.raises(ValueError):
        analysis.kappa_mincount(0)


def test_arv_factor_examples():
    assert analysis.arv_factor(1.0) == 0.5
    for k in (1, 2, 5):
        assert analysis.arv_factor(analysis.kappa_mincount(k)) == pytest.approx(
            1.0 / (2 * k), rel=1e-15
        )
    assert analysis.arv_factor(1.0 / (2.0 * math.log(2.0))) == pytest.approx(
        math.log(2.0), rel=1e-15
    )


def test_scheme_constants_identity():
    for scheme in ("mpcsa", "mloglog", "mcurtain", "mmincount"):
        c = analysis.scheme_constants(scheme, q=2.5, a=2, h=1, k=3)
        assert c.arv_factor * c.kappa == pytest.approx(0.5, rel=1e-14)
        assert c.mvp == pytest.approx(c.bits_per_column * c.arv_factor, rel=1e-14)


# ------------------------------------------------------------ numeric cross-check


GRID = (
    [("pcsa", q, 2, 1) for q in (2.0, math.e, 2.91)]
    + [("loglog", q, 2, 1) for q in (2.0, math.e, 2.91)]
    + [("curtain", *p) for p in ((2.0, 1, 1), (2.91, 2, 1), (math.e, 4, 2))]
)


def closed_form(scheme, q, a, h):
    if scheme == "pcsa":
        return analysis.kappa_pcsa(q)
    if scheme == "loglog":
        return analysis.kappa_loglog(q)
    return analysis.kappa_curtain(q, a, h)


def test_kappa_numeric_matches_closed_forms_on_grid():
    for scheme, q, a, h in GRID:
        want = closed_form(scheme, q, a, h)
        for lam in (1.0, 10.0, 100.0):
            got = analysis.kappa_numeric(scheme, q, a=a, h=h, lam=lam)
            assert abs(got - want) <= 1e-6, (scheme, q, a, h, lam)


def test_kappa_numeric_lambda_independent():
    for scheme, q, a, h in GRID:
        vals = [analysis.kappa_numeric(scheme, q, a=a, h=h, lam=lam) for lam in (1, 10, 100)]
        assert max(vals) - min(vals) <= 1e-8


def test_kappa_numeric_validation():
    with pytest.raises(ValueError):
        analysis.kappa_numeric("pcsa", 2.0, lam=0.0)
    with pytest.raises(ValueError):
        analysis.kappa_numeric("nope", 2.0)


def test_exponential_integral_identity():
    # int c0 q**-t exp(-c1 q**-t) dt over the line equals c0 / (c1 ln q)
    rng = random.Random(17)
    for _ in range(10):
        c0 = rng.uniform(0.5, 5.0)
        c1 = rng.uniform(0.5, 5.0)
        q = rng.uniform(1.6, 4.0)

        def f(t):
            u = -t * math.log(q)  # q**-t = e**u; the e**-c1*e**u factor wins
            if u > 600.0:
                return 0.0
            x = math.exp(u)
            return c0 * x * math.exp(-c1 * x)

        val, _err = quad(f, -math.inf, math.inf, epsabs=1e-12, epsrel=1e-11)
        assert abs(val - c0 / (c1 * math.log(q))) <= 1e-8


# ----------------------------------------------------------------------- mvp


def test_mvp_curtain_value_and_identity():
    assert analysis.mvp_curtain(2.91, 2, 1) == pytest.approx(2.31, abs=0.01)
    for q, a, h in ((2.0, 1, 1), (2.91, 2, 1), (3.5, 4, 2)):
        direct = analysis.mvp_curtain(q, a, h)
        composed = (math.log2(2 * a) + h) * analysis.arv_factor(
            analysis.kappa_curtain(q, a, h)
        )
        assert direct == pytest.approx(composed, rel=1e-12)


def test_mvp_grid_argmin_stable():
    q1, a1, h1, v1 = analysis.curtain_mvp_argmin(q_step=0.02)
    q2, a2, h2, v2 = analysis.curtain_mvp_argmin(q_step=0.01)
    assert (a1, h1) == (2, 1)
    assert (a2, h2) == (2, 1)
    assert abs(q1 - 2.91) <= 0.03
    assert abs(q2 - q1) <= 0.02
    assert v2 <= v1 + 1e-12
    assert v2 == pytest.approx(2.31, abs=0.01)


# ---------------------------------------------------------------- entropy constants


def test_h0_i0_values():
    h0 = analysis.h0_constant()
    i0 = analysis.i0_constant()
    assert i0 == pytest.approx(1.644934066848226, rel=1e-12)
    assert h0 / 2.0 == pytest.approx(1.63, abs=0.005)
    assert h0 / i0 == pytest.approx(1.98, abs=0.005)


def test_h0_against_mpmath_oracle():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    series = mp.nsum(lambda k: mp.log(1 + 1 / k) / k, [1, mp.inf]) / mp.log(2)
    want = float(1 / mp.log(2) + series)
    assert analysis.h0_constant() == pytest.approx(want, abs=1e-9)


# ----------------------------------------------------------------------- alpha_m


def test_alpha_m_known_values():
    # classic small-m constants: 0.673 at m=16, 0.697 at 32, 0.709 at 64
    assert analysis.alpha_m(16) == pytest.approx(0.673, abs=1.5e-3)
    assert analysis.alpha_m(32) == pytest.approx(0.697, abs=1.5e-3)
    assert analysis.alpha_m(64) == pytest.approx(0.709, abs=1.5e-3)


def test_alpha_m_limit_and_monotonicity():
    limit = 1.0 / (2.0 * math.log(2.0))  # 0.72134...
    assert analysis.alpha_m(2**14) == pytest.approx(limit, abs=5e-4)
    vals = [analysis.alpha_m(m) for m in (16, 64, 256)]
    assert vals[0] < vals[1] < vals[2] < limit


# ---------------------------------------------------------------------- predict


def test_predictions_match_reported_values():
    mll = analysis.predict("mloglog", 200, q=2.0)
    assert abs(mll.relvar - 0.00347) <= 1e-5
    mcu = analysis.predict("mcurtain", 400, q=2.91, a=2, h=1)
    assert abs(mcu.relvar - 0.00193) <= 2e-5
    mcu37 = analysis.predict("mcurtain", 37, q=2.91, a=2, h=1)
    assert abs(mcu37.relvar - 0.0208) <= 5e-5
    hll = analysis.predict("hll", 200)
    assert hll.stderr == pytest.approx(0.0735, abs=2e-4)


def test_mvp_table_values():
    rows = {r["sketch"]: r["mvp"] for r in analysis.mvp_table(64)}
    assert rows["martingale-loglog"] == pytest.approx(4.16, abs=0.01)
    assert rows["martingale-pcsa"] == pytest.approx(22.4, abs=0.05)
    assert rows["martingale-fishmonger"] == pytest.approx(1.63, abs=0.005)
    assert rows["martingale-mincount"] == pytest.approx(32.0, abs=1e-9)
    assert rows["martingale-curtain"] == pytest.approx(2.31, abs=0.01)
    assert rows["fishmonger"] == pytest.approx(1.98, abs=0.005)
    assert rows["pcsa"] == pytest.approx(38.9, abs=0.1)
    assert rows["loglog"] == pytest.approx(10.11, abs=0.02)
    assert rows["mincount"] == pytest.approx(64.0, abs=1e-9)
    assert rows["hll"] == pytest.approx(6.48, abs=0.01)
