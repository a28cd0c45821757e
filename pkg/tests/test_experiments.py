import math

import pytest

from graphpoincare.calculus import INF, Exponent
from graphpoincare.config import RunConfig
from graphpoincare.errors import InputError
from graphpoincare.graphs import ball
from graphpoincare.pool import derive_seed, run_trials
from graphpoincare.services.extremal import (
    TreeSource,
    extremal_sweep,
    optimality_sweep,
    reproduce_prop34,
    split_checks,
)
from graphpoincare.services.flows import flow_suite, flow_trial, summarize
from graphpoincare.services.grid_chords import RowInstance, ex31_sweep, reproduce as reproduce_ex31, row_checks
from graphpoincare.services.harmonic_line import (
    closed_form_display_sum,
    closed_form_mass,
    display_sum,
    ex32_sweep,
    line_row,
)
from graphpoincare.services.suites import SUITES, run_suite
from graphpoincare.services.utils import format_value, parse_int_list, write_csv

P1 = Exponent(1.0)
P2 = Exponent(2.0)


# ---------------------------------------------------------------------------
# Shared helpers


def test_parse_int_list():
    assert parse_int_list("8..64", geometric=True) == [8, 16, 32, 64]
    assert parse_int_list("1..4") == [1, 2, 3, 4]
    assert parse_int_list("3, 5,7") == [3, 5, 7]
    with pytest.raises(InputError):
        parse_int_list("4..1")
    with pytest.raises(InputError):
        parse_int_list("a,b")


def test_csv_dialect(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(path, ("a", "b", "c"), [{"a": 1, "b": math.inf, "c": True}, {"a": 2, "b": 0.1, "c": False}])
    assert path.read_bytes() == b"a,b,c\n1,inf,true\n2,0.1,false\n"


def test_format_value_numpy_float():
    import numpy as np

    assert format_value(np.float64(0.25)) == "0.25"


def test_trial_seeds_are_schedule_independent():
    assert derive_seed(7, 3) == derive_seed(7, 3)
    assert derive_seed(7, 3) != derive_seed(7, 4)
    inline = run_trials(flow_trial, 5, 4, workers=1, show_progress=False)
    pooled = run_trials(flow_trial, 5, 4, workers=2, show_progress=False)
    assert [r.model_dump() for r in inline] == [r.model_dump() for r in pooled]


# ---------------------------------------------------------------------------
# Rows of the grid with chords


@pytest.mark.parametrize("k", [4, 8, 16, 32, 64])
def test_row_closed_forms(k):
    checks = row_checks(k)
    assert checks.passed
    assert checks.mean == str(k // 2)
    assert checks.sup_ratio == k / 4


def test_long_rows_are_not_quasiconvex():
    checks = row_checks(8)
    assert not checks.quasiconvex
    assert checks.witness is not None
    assert checks.witness_distance > 2 * checks.diam


def test_odd_rows_rejected():
    with pytest.raises(InputError):
        RowInstance(7)


def test_sup_rows_match_fixture(tmp_path, fixtures):
    cfg = RunConfig(command="reproduce", k_values=[8, 16, 32, 64], p_list=["inf"], out=tmp_path)
    verdict = reproduce_ex31(cfg)
    assert verdict.passed
    expected = (fixtures / "ex31_inf.csv").read_text()
    assert (tmp_path / "ex31.csv").read_text() == expected
    assert (tmp_path / "ex31.verdict.json").exists()
    assert (tmp_path / "ex31.meta.json").exists()


def test_reproduce_is_byte_identical(tmp_path):
    outputs = []
    for name in ("first", "second"):
        cfg = RunConfig(command="reproduce", k_values=[8, 16], p_list=["2"], out=tmp_path / name)
        reproduce_ex31(cfg)
        outputs.append(((tmp_path / name / "ex31.csv").read_bytes(), (tmp_path / name / "ex31.verdict.json").read_bytes()))
    assert outputs[0] == outputs[1]


@pytest.mark.slow
def test_row_sweep_slopes():
    sweeps = ex31_sweep([8, 16, 32, 64, 128, 256], [Exponent(1.5), P2, Exponent(4.0)])
    for sweep in sweeps:
        assert sweep.verdict == "pass", sweep.summary()


# ---------------------------------------------------------------------------
# Line with decaying weights


def test_harmonic_closed_forms():
    direct = 1 + 2 * math.fsum(1 / j for j in range(1, 101))
    assert closed_form_mass(100) == pytest.approx(direct, rel=1e-12)
    assert display_sum(10, P1) == closed_form_display_sum(10, P1) == 21.0
    assert display_sum(10, P2) == closed_form_display_sum(10, P2) == 110.0
    assert closed_form_display_sum(10, Exponent(3.0)) is None


def test_line_row_checks():
    row, checks = line_row(16, P2)
    assert all(checks.values()), checks
    assert row["k"] == 16
    with pytest.raises(InputError):
        line_row(16, INF)
    with pytest.raises(InputError):
        line_row(1, P2)


def test_line_sweep_bounded():
    sweeps = ex32_sweep([64, 128, 256, 512], [P1, P2])
    for sweep in sweeps:
        assert sweep.checks["bounded_ratio"]
        assert sweep.verdict == "pass", sweep.summary()


@pytest.mark.slow
def test_line_sweep_full_range():
    k_values = [2**j for j in range(6, 17)]
    for sweep in ex32_sweep(k_values, [P1, P2]):
        assert [row["k"] for row in sweep.rows] == k_values
        assert sweep.verdict == "pass", sweep.summary()


# ---------------------------------------------------------------------------
# Extremal functions on trees


def test_sup_construction_reaches_third_of_radius():
    (sweep,) = extremal_sweep(TreeSource(), [4, 5, 6, 7], [INF])
    for row in sweep.rows:
        assert row["ratio"] == pytest.approx(row["r"] / 3, rel=1e-12)
    assert sweep.checks["lower_bound"]
    assert sweep.checks["mean_zero"]


def test_split_construction_at_radius_four():
    (sweep,) = extremal_sweep(TreeSource(), [4], [P1])
    assert sweep.rows[0]["ratio"] == pytest.approx(14 / 5.5)
    assert sweep.checks["lower_bound"]


def test_balanced_splits_hold():
    result = split_checks(seed=0, count=20)
    assert result["failures"] == []
    assert result["checked"] == 20


def test_optimality_only_for_extreme_exponents():
    with pytest.raises(InputError):
        optimality_sweep(TreeSource(), [4, 5], [P2])


def test_optimality_bracket():
    (sweep,) = optimality_sweep(TreeSource(), [4, 5, 6], [INF])
    assert sweep.checks["lower_below_upper"]
    for row in sweep.rows:
        assert row["lower"] <= row["upper"]


def test_optimality_bracket_at_p1():
    (sweep,) = optimality_sweep(TreeSource(), [4, 5, 6], [P1])
    assert sweep.checks["lower_below_upper"]
    assert sweep.checks["ball_mass_comparable"]
    for row in sweep.rows:
        assert 0 < row["lower"] <= row["upper"]
        assert row["ball_mass_spread"] == 1.0


def test_tree_source_parse():
    assert TreeSource.parse(None) == TreeSource()
    source = TreeSource.parse("random_tree:3,0.25", "uniform", seed=4)
    assert (source.kind, source.b, source.branching, source.measure, source.seed) == ("random_tree", 3, 0.25, "uniform", 4)
    assert not source.regular
    assert TreeSource.parse("homogeneous_tree:3").regular
    with pytest.raises(InputError):
        TreeSource.parse("random_bounded:20,2")
    with pytest.raises(InputError):
        TreeSource.parse("random_tree:2,1.5")


def test_random_tree_centers_sit_halfway():
    source = TreeSource(kind="random_tree", b=3, seed=2)
    g, m, centers = source.instance(3)
    assert 1 <= len(centers) <= 8
    for c in centers:
        assert len(ball(g, c, 3)) >= 7
    assert source.instance(3)[2] == centers


@pytest.mark.parametrize("measure", ["counting", "uniform"])
def test_sweeps_on_random_trees(measure):
    source = TreeSource(kind="random_tree", b=3, measure=measure, seed=11)
    (built,) = extremal_sweep(source, [3, 4], [INF])
    assert built.checks["lower_bound"]
    assert built.checks["mean_zero"]
    assert "ball_mass_comparable" in built.checks
    assert "constant_stable" not in built.checks
    (bracket,) = optimality_sweep(source, [3, 4], [INF])
    assert bracket.checks["lower_below_upper"]
    assert all(row["ball_mass_spread"] >= 1.0 for row in bracket.rows)


def test_uniform_measure_on_homogeneous_tree():
    source = TreeSource(measure="uniform", seed=5)
    (sweep,) = optimality_sweep(source, [4, 5], [INF])
    assert sweep.checks["ball_mass_comparable"]
    assert sweep.checks["lower_below_upper"]


@pytest.mark.slow
def test_prop34_reproduction(tmp_path):
    cfg = RunConfig(command="reproduce", r_values=list(range(4, 13)), p_list=["1", "inf"], out=tmp_path)
    verdict = reproduce_prop34(cfg)
    assert verdict.passed, verdict.sweeps
    assert (tmp_path / "prop34.csv").exists()


# ---------------------------------------------------------------------------
# Flow trials and suites


def test_flow_trials_pass():
    results = flow_suite(30, seed=7, show_progress=False)
    summary = summarize(results)
    assert summary["trials"] == 30
    assert summary["failures"] == 0
    assert summary["chain_bound_failures"] == 0
    assert summary["mass_relaxed_failures"] == 0


def test_flow_trial_is_reproducible():
    seed = derive_seed(7, 0)
    assert flow_trial(0, seed).model_dump() == flow_trial(0, seed).model_dump()


@pytest.mark.parametrize("suite", SUITES)
def test_suites_pass(suite):
    summary = run_suite(suite, 15, seed=3, show_progress=False)
    assert summary.passed, summary
    assert summary.trials == 15


def test_empty_suite_passes_vacuously():
    summary = run_suite("thm21", 0, seed=1, show_progress=False)
    assert summary.passed
    assert summary.failures == 0


def test_unknown_suite():
    with pytest.raises(InputError):
        run_suite("thm99", 1, seed=0, show_progress=False)


@pytest.mark.slow
@pytest.mark.parametrize("suite,trials", [("thm21", 500), ("cor23", 200), ("thm41", 500)])
def test_full_suites(suite, trials):
    summary = run_suite(suite, trials, seed=7, show_progress=False)
    assert summary.failures == 0
