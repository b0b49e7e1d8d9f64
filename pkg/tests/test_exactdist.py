"""
Testes das tabelas exatas de cauda e do oráculo por enumeração
"""

import json
import logging
import math
from fractions import Fraction

import mpmath
import pytest

import offspring
from errors import BadK, InfeasibleSize, NoBranching, NotCritical, PrecisionExhausted
from exactdist import (conditional_bruteforce, enumerated_law, expected_value,
                       fit_doubly_exponential_slope, hs_tail_table, kary_tail_table,
                       rigid_constants, rigid_tail_table, table_csv, tail_table, write_table,
                       _kary_table)

PARAMETRIC = ['geometric-half', 'poisson1']
BUILTINS = ['catalan', 'full-binary', 'geometric-half', 'poisson1', 'binomial(2)', 'binomial(3)', 'binomial(5)']


def _ctx(bits=256):
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


def _max_abs_diff(a, b):
    ctx = _ctx(512)
    return max(abs(ctx.mpf(x) - ctx.mpf(y)) for x, y in zip(a, b))


class TestHs:

    def test_catalan_closed_form(self, catalan):
        table = hs_tail_table(catalan, 40)
        ctx = _ctx()
        for x in range(41):
            expected = ctx.ldexp(1, -(x + 1))
            assert abs(ctx.mpf(table.q[x]) - expected) <= ctx.ldexp(expected, -128)

    def test_csv_row(self, catalan):
        text = table_csv(hs_tail_table(catalan, 3))
        lines = text.splitlines()
        assert lines[0] == "x,q,survival"
        assert lines[2] == "1,0.25,0.5"

    def test_full_binary_matches_catalan(self, catalan, full_binary):
        a = hs_tail_table(catalan, 30)
        b = hs_tail_table(full_binary, 30)
        assert a.q == b.q
        assert a.s == b.s

    def test_geometric_base_case(self):
        table = hs_tail_table(offspring.builtin('geometric-half'), 2)
        assert float(table.q[0]) == pytest.approx(2 / 3, rel=1e-15)

    def test_table_invariants(self):
        table = hs_tail_table(offspring.builtin('poisson1'), 20)
        assert len(table.q) == 21
        assert len(table.s) == 22
        assert table.s[0] == 1
        for x in range(21):
            assert table.s[x + 1] == table.s[x] - table.q[x]
            assert 0 < table.q[x] <= table.s[x]
        assert table.truncation_mass < 2 ** -100
        frame = table.to_frame()
        assert list(frame.columns) == ['x', 'q', 'survival']
        assert len(frame) == 21

    @pytest.mark.parametrize('name', PARAMETRIC)
    def test_single_child_removal_preserves_law(self, name):
        dist = offspring.builtin(name)
        with_transform = hs_tail_table(dist, 30)
        without = hs_tail_table(dist, 30, apply_transform=False)
        assert with_transform.transform_applied and not without.transform_applied
        assert _max_abs_diff(with_transform.q, without.q) < mpmath.mpf(2) ** -100

    @pytest.mark.parametrize('name', BUILTINS)
    def test_monotone_and_bounded(self, name):
        dist = offspring.from_spec(name)
        table = hs_tail_table(dist, 40)
        for x in range(2, 41):
            assert table.q[x] < table.q[x - 1]
            assert float(table.q[x]) <= dist.p0 * 2 ** (-x / 2) * (1 + 1e-12)

    @pytest.mark.parametrize('name', ['catalan', 'geometric-half', 'poisson1'])
    def test_geometric_decay_rate(self, name):
        table = hs_tail_table(offspring.builtin(name), 40)
        assert abs(float(table.q[40] / table.q[39]) - 0.5) < 0.01

    def test_leaf_only(self):
        table = hs_tail_table(offspring.new_finite([1]), 3)
        assert table.q[0] == 1
        assert all(v == 0 for v in table.q[1:])

    def test_rejects_bad_arguments(self, catalan):
        with pytest.raises(ValueError):
            hs_tail_table(catalan, -1)
        with pytest.raises(ValueError):
            hs_tail_table(catalan, 5, precision_bits=64)
        with pytest.raises(NotCritical):
            hs_tail_table(offspring.new_finite([0.5, 0.5]), 5)

    def test_warns_about_criticality_defect(self, caplog):
        dist = offspring.from_spec('pmf:0.2499999999999,0.5,0.2500000000001')
        with caplog.at_level(logging.WARNING, logger='exactdist'):
            hs_tail_table(dist, 3)
        assert any('média - 1' in r.getMessage() for r in caplog.records)


class TestRigid:

    def test_ternary_base_and_slope(self, ternary):
        table = rigid_tail_table(ternary, 12, precision_bits=512)
        assert float(table.q[0]) == pytest.approx(2 / 3)
        slope = fit_doubly_exponential_slope(table, 5, 12)
        assert slope == pytest.approx(math.log(1.5), rel=0.05)

    def test_poisson_ratio(self):
        table = rigid_tail_table(offspring.builtin('poisson1'), 30)
        gamma = 1 + math.sqrt(math.e)
        assert abs(float(table.q[30] / table.q[29]) - 1 / gamma) < 0.02

    @pytest.mark.parametrize('name', PARAMETRIC)
    def test_single_child_removal_preserves_law(self, name):
        dist = offspring.builtin(name)
        with_transform = rigid_tail_table(dist, 15)
        without = rigid_tail_table(dist, 15, apply_transform=False)
        assert _max_abs_diff(with_transform.q, without.q) < mpmath.mpf(2) ** -100

    def test_catalan_first_values(self, catalan):
        # após a remoção de p1: u = 1/2 - u no primeiro passo
        rigid = rigid_tail_table(catalan, 1)
        assert float(rigid.q[0]) == pytest.approx(0.5)
        assert float(rigid.q[1]) == pytest.approx(0.25)

    def test_ternary_slope_at_default_precision(self, ternary):
        table = rigid_tail_table(ternary, 12)
        slope = fit_doubly_exponential_slope(table, 5, 12)
        assert slope == pytest.approx(math.log(1.5), rel=0.05)
        wide = rigid_tail_table(ternary, 12, precision_bits=1024)
        ctx = _ctx(1024)
        for x in (11, 12):
            a, b = ctx.mpf(table.q[x]), ctx.mpf(wide.q[x])
            assert abs(a - b) <= ctx.mpf(10) ** -30 * b

    def test_precision_exhausted(self, ternary):
        # a bisseção deixa de caber no limite de iterações bem depois de x = 12
        with pytest.raises(PrecisionExhausted) as info:
            rigid_tail_table(ternary, 40, precision_bits=256)
        assert 12 < info.value.x <= 40


class TestKary:

    def test_ternary_slope_and_agreement_with_rigid(self, ternary):
        kary = kary_tail_table(ternary, 3, 12, precision_bits=512)
        rigid = rigid_tail_table(ternary, 12, precision_bits=512)
        assert float(kary.q[0]) == pytest.approx(2 / 3)
        slope = fit_doubly_exponential_slope(kary, 5, 12)
        assert slope == pytest.approx(math.log(1.5), rel=0.05)
        ctx = _ctx(512)
        for x in range(13):
            a, b = ctx.mpf(kary.q[x]), ctx.mpf(rigid.q[x])
            assert abs(a - b) <= ctx.mpf(10) ** -30 * b

    def test_binary_support_never_reaches_one(self, catalan):
        table = kary_tail_table(catalan, 3, 4)
        assert table.q[0] == 1
        assert all(v == 0 for v in table.q[1:])
        assert not table.transform_applied

    def test_binomial_base_case(self):
        table = kary_tail_table(offspring.builtin('binomial', {'k': 3}), 3, 2)
        assert float(table.q[0]) == pytest.approx((15 - math.sqrt(33)) / 12, rel=1e-12)

    def test_k_two_reproduces_hs(self, catalan):
        kary = _kary_table(catalan, 2, 20, 256)
        hs = hs_tail_table(catalan, 20, apply_transform=False)
        assert _max_abs_diff(kary.q, hs.q) < mpmath.mpf(2) ** -100

    def test_bad_k(self, catalan):
        with pytest.raises(BadK):
            kary_tail_table(catalan, 2, 5)
        with pytest.raises(BadK):
            tail_table(catalan, 'kary:2', 5)
        with pytest.raises(BadK):
            tail_table(catalan, 'kary:x', 5)


class TestDispatch:

    def test_names(self, catalan):
        assert tail_table(catalan, 'hs', 2).statistic == 'hs'
        assert tail_table(catalan, 'rigid', 2).statistic == 'rigid'
        assert tail_table(catalan, 'kary:3', 2).statistic == 'kary:3'

    def test_no_exact_table_for_french(self, catalan):
        with pytest.raises(ValueError):
            tail_table(catalan, 'french', 2)


class TestConstants:

    def test_catalan(self, catalan):
        constants = rigid_constants(catalan)
        assert constants.d == 2
        assert constants.gamma == pytest.approx(2.0)

    def test_poisson(self):
        constants = rigid_constants(offspring.builtin('poisson1'))
        assert constants.gamma == pytest.approx(1 + math.sqrt(math.e), rel=1e-9)

    def test_ternary(self, ternary):
        constants = rigid_constants(ternary)
        assert constants.d == 3
        assert constants.gamma is None

    def test_no_branching(self):
        with pytest.raises(NoBranching):
            rigid_constants(offspring.new_finite([1]))

    def test_non_critical(self):
        with pytest.raises(NotCritical):
            rigid_constants(offspring.new_finite([0.5, 0.5]))


class TestEnumerationOracle:

    def test_catalan_three(self, catalan):
        assert conditional_bruteforce(catalan, 3) == {0: pytest.approx(0.8), 1: pytest.approx(0.2)}

    def test_full_binary_seven(self, full_binary):
        law = conditional_bruteforce(full_binary, 7)
        assert law == {1: pytest.approx(0.8), 2: pytest.approx(0.2)}
        assert expected_value(law) == pytest.approx(1.2)

    def test_exact_weights(self, catalan):
        joint, total = enumerated_law(catalan, 3, 'hs')
        assert total == Fraction(5, 64)
        assert joint == {0: Fraction(1, 16), 1: Fraction(1, 64)}

    def test_other_statistics(self, catalan):
        law = conditional_bruteforce(catalan, 4, 'canadian')
        assert sum(law.values()) == pytest.approx(1.0)
        assert set(law) <= {0, 1, 2}

    def test_infeasible(self, full_binary):
        with pytest.raises(InfeasibleSize):
            enumerated_law(full_binary, 4, 'hs')

    def test_partial_sums_approach_table(self, catalan):
        table = hs_tail_table(catalan, 2)
        partial = {0: Fraction(0), 1: Fraction(0)}
        for n in range(1, 13):
            joint, _ = enumerated_law(catalan, n, 'hs')
            for x in partial:
                partial[x] += joint.get(x, 0)
        gap = float(table.q[0]) - float(partial[0])
        assert 0 <= gap <= 2 ** -12
        assert float(partial[1]) <= float(table.q[1])


class TestOutput:

    def test_write_table_with_sidecar(self, catalan, tmp_path):
        out = tmp_path / 'hs.csv'
        write_table(hs_tail_table(catalan, 2), out)
        assert out.read_text().splitlines()[1] == "0,0.5,1.0"
        metadata = json.loads((tmp_path / 'hs.csv.json').read_text())
        assert metadata['dist'] == 'catalan'
        assert metadata['statistic'] == 'hs'
        assert metadata['precision'] == 256
        assert metadata['transform_applied'] is True

    def test_write_table_stdout(self, catalan, capsys):
        write_table(hs_tail_table(catalan, 1), '-')
        assert capsys.readouterr().out.splitlines()[2] == "1,0.25,0.5"

    def test_bad_fit_interval(self, catalan):
        with pytest.raises(ValueError):
            fit_doubly_exponential_slope(hs_tail_table(catalan, 5), 3, 9)
