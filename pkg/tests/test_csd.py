import itertools
import math

import numpy as np
import pytest

from shiftadd.core import ExponentRange, TargetMatrix
from shiftadd.cost import count_additions
from shiftadd.csd import csd_decompose, csd_matrix_baseline, csd_quantize, csd_reconstruct
from shiftadd.decompose import DecomposeConfig
from shiftadd.evaluate import evaluate_dag


def exhaustive_best_error(value, digits, exponents):
    """Oracle: smallest |value - sum| over all <=digits signed-digit sums."""
    grid = [
        sign * math.ldexp(1.0, e)
        for e in range(exponents.lo, exponents.hi + 1)
        for sign in (1, -1)
    ]
    best = abs(value)
    for m in range(1, digits + 1):
        for combo in itertools.combinations_with_replacement(grid, m):
            err = abs(value - sum(combo))
            if err < best:
                best = err
    return best


class TestCsdQuantize:
    def test_thirteen(self):
        digits = csd_quantize(13.0, 3)
        assert [(c.sign, c.exponent) for c in digits] == [(1, 4), (-1, 2), (1, 0)]
        assert csd_reconstruct(digits) == 13.0

    def test_exact_power(self):
        digits = csd_quantize(2.0**-3, 1)
        assert [(c.sign, c.exponent) for c in digits] == [(1, -3)]

    def test_point_seven(self):
        # 0.5 errs by 0.2; 1.0 would err by 0.3.
        digits = csd_quantize(0.7, 1)
        assert [(c.sign, c.exponent) for c in digits] == [(1, -1)]

    def test_zero_gives_empty(self):
        assert csd_quantize(0.0, 4) == []

    def test_negative_value(self):
        digits = csd_quantize(-13.0, 3)
        assert [(c.sign, c.exponent) for c in digits] == [(-1, 4), (1, 2), (-1, 0)]

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            csd_quantize(1.0, 0)
        with pytest.raises(ValueError):
            csd_quantize(math.inf, 2)

    def test_error_nonincreasing_in_digits(self, rng):
        for _ in range(200):
            v = float(rng.standard_normal()) * 10.0
            errs = [
                abs(v - csd_reconstruct(csd_quantize(v, d))) for d in range(1, 7)
            ]
            assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_matches_exhaustive_oracle(self, rng):
        # Greedy is per-digit error-optimal at these scales; check against
        # full enumeration on a narrow exponent window.
        exps = ExponentRange(-3, 3)
        for _ in range(40):
            v = float(rng.uniform(-10.0, 10.0))
            for d in (1, 2):
                got = abs(v - csd_reconstruct(csd_quantize(v, d, exps)))
                oracle = exhaustive_best_error(v, d, exps)
                assert got == pytest.approx(oracle, abs=1e-12)

    def test_integer_examples(self):
        # Greedy minimal-weight recodings of a few integers.
        assert csd_reconstruct(csd_quantize(22.0, 3)) == 22.0
        assert csd_reconstruct(csd_quantize(45.0, 4)) == 45.0
        assert len(csd_quantize(45.0, 4)) <= 4


class TestCsdMatrixBaseline:
    def test_identity_costs_nothing(self):
        res = csd_matrix_baseline(TargetMatrix(np.eye(3)), 3)
        assert count_additions(res.dag) == 0
        assert res.sqnr_db == math.inf

    def test_thirteen_one_row(self):
        # Entry 13 needs 2 chain adds; the row tree adds 1 more.
        res = csd_matrix_baseline(TargetMatrix([[13.0, 1.0]]), 3)
        assert count_additions(res.dag) == 3
        y = evaluate_dag(res.dag, np.array([1.0, 1.0]))
        assert y[0] == 14.0

    def test_evaluates_to_quantized_matrix(self, rng):
        t = TargetMatrix(rng.standard_normal((4, 3)))
        digits = 3
        res = csd_matrix_baseline(t, digits)
        q = np.zeros((4, 3))
        for n in range(4):
            for k in range(3):
                q[n, k] = csd_reconstruct(csd_quantize(float(t.matrix[n, k]), digits))
        for _ in range(20):
            x = rng.standard_normal(3)
            assert np.allclose(evaluate_dag(res.dag, x), q @ x, rtol=1e-12, atol=1e-14)

    def test_sqnr_improves_with_digits(self, rng):
        t = TargetMatrix(rng.standard_normal((6, 4)))
        sqnrs = [csd_matrix_baseline(t, d).sqnr_db for d in range(1, 5)]
        assert all(b > a for a, b in zip(sqnrs, sqnrs[1:]))


class TestCsdDecompose:
    def test_reaches_target(self, rng):
        t = TargetMatrix(rng.standard_normal((5, 3)))
        res = csd_decompose(t, DecomposeConfig(algorithm="csd", target_sqnr_db=40.0))
        assert res.converged
        assert res.sqnr_db > 40.0
        # One record per digit count tried.
        assert [r.step for r in res.iterations] == list(
            range(1, len(res.iterations) + 1)
        )

    def test_budget_stop(self, rng):
        t = TargetMatrix(rng.standard_normal((5, 3)))
        res = csd_decompose(
            t,
            DecomposeConfig(algorithm="csd", target_sqnr_db=math.inf, max_additions=30),
        )
        assert res.flag in ("max_additions", "max_digits")
