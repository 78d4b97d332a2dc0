"""Statistics checks against mpmath (arbitrary precision) and scipy.

The local incomplete-beta implementation must track mpmath to 1e-12 over
the parameter ranges the t-test actually visits, and paired_t_test must
agree with scipy.stats.ttest_rel on random data.
"""

import csv
import json
import math

import mpmath
import numpy as np
import pytest
from scipy import stats as sps

from irof import (
    CallableBackend,
    ConfigError,
    DataError,
    SlicParams,
    paired_t_test,
    regularized_incomplete_beta,
    sensitivity_report,
    student_t_two_sided_p,
)
from irof.stats import report_to_json, write_plot_csv, write_report_csv

mpmath.mp.dps = 30


# --------------------------------------------------------------------------
# incomplete beta and the t tail
# --------------------------------------------------------------------------


def test_incomplete_beta_matches_mpmath():
    for a in (0.5, 1.0, 2.5, 19.5, 25.0):
        for b in (0.5, 1.0, 3.0, 12.5):
            for x in (1e-9, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9):
                ref = float(
                    mpmath.betainc(a, b, 0, x, regularized=True)
                )
                got = regularized_incomplete_beta(a, b, x)
                assert got == pytest.approx(ref, rel=1e-11, abs=1e-14), (a, b, x)


def test_incomplete_beta_endpoints_and_symmetry():
    assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0
    for a, b, x in [(2.0, 5.0, 0.3), (7.5, 0.5, 0.9)]:
        left = regularized_incomplete_beta(a, b, x)
        right = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x)
        assert left == pytest.approx(right, rel=1e-11)
    with pytest.raises(ValueError):
        regularized_incomplete_beta(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        regularized_incomplete_beta(1.0, -2.0, 0.5)


def test_t_tail_matches_scipy():
    for df in (1, 2, 5, 10, 39, 40, 49, 50, 120):
        for t in (0.1, 0.5, 1.0, 2.1, 3.3, 5.44, 7.81, 12.0):
            ref = 2.0 * sps.t.sf(t, df)
            got = student_t_two_sided_p(t, df)
            assert got == pytest.approx(ref, rel=1e-10), (t, df)
            assert student_t_two_sided_p(-t, df) == got


def test_t_tail_edge_cases():
    assert student_t_two_sided_p(0.0, 10) == 1.0
    with pytest.raises(ValueError):
        student_t_two_sided_p(1.0, 0)
    # monotone in |t|
    ps = [student_t_two_sided_p(t, 20) for t in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert ps == sorted(ps, reverse=True)


def test_t_tail_published_anchor():
    # |t| = 2.10 with 40 paired samples (df 39): p ~= 4.25e-2
    p = student_t_two_sided_p(2.10, 39)
    assert p == pytest.approx(4.25e-2, rel=0.05)


# --------------------------------------------------------------------------
# paired t-test
# --------------------------------------------------------------------------


def test_paired_t_matches_scipy():
    rng = np.random.default_rng(163)
    for n in (2, 5, 20, 40):
        a = rng.normal(0.4, 0.2, n)
        b = rng.normal(0.3, 0.2, n)
        got = paired_t_test(a, b)
        ref = sps.ttest_rel(a, b)
        assert got.t_statistic == pytest.approx(float(ref.statistic), rel=1e-10)
        assert got.p_value == pytest.approx(float(ref.pvalue), rel=1e-9)
        assert got.n == n
        assert got.mean_difference == pytest.approx(float(np.mean(a - b)))


def test_paired_t_antisymmetry():
    rng = np.random.default_rng(167)
    a = rng.normal(0.0, 1.0, 15)
    b = rng.normal(0.5, 1.0, 15)
    fwd = paired_t_test(a, b)
    rev = paired_t_test(b, a)
    assert fwd.t_statistic == pytest.approx(-rev.t_statistic, rel=1e-12)
    assert fwd.p_value == pytest.approx(rev.p_value, rel=1e-12)


def test_paired_t_shift_invariance():
    rng = np.random.default_rng(173)
    a = rng.normal(0.0, 1.0, 12)
    b = rng.normal(0.0, 1.0, 12)
    base = paired_t_test(a, b)
    shifted = paired_t_test(a + 5.0, b + 5.0)
    assert shifted.t_statistic == pytest.approx(base.t_statistic, rel=1e-9)


def test_paired_t_validation():
    with pytest.raises(DataError):
        paired_t_test([1.0], [0.5])
    with pytest.raises(DataError):
        paired_t_test([1.0, 2.0], [0.5])
    with pytest.raises(DataError):
        paired_t_test([1.0, 2.0], [0.5, 1.5])  # constant differences


# --------------------------------------------------------------------------
# sensitivity report
# --------------------------------------------------------------------------


def test_empty_methods_empty_report(disk_backend):
    rep = sensitivity_report([], ["irof-black"], [], disk_backend)
    assert rep.cells == ()


def test_report_validation(disk_items, disk_backend):
    sub = disk_items[:3]
    with pytest.raises(ConfigError):
        sensitivity_report(["gt"], ["whatever"], sub, disk_backend)
    with pytest.raises(ConfigError):
        sensitivity_report(["gt"], ["irof-black"], sub, disk_backend,
                           statistic="median")
    with pytest.raises(ConfigError):
        sensitivity_report(["gt"], ["pixel-black"], sub, disk_backend,
                           statistic="aoc")
    with pytest.raises(ConfigError):
        sensitivity_report(["gt"], ["irof-black"], sub, disk_backend,
                           fraction=0.0)
    with pytest.raises(DataError):
        sensitivity_report(["gt"], ["irof-black"], [], disk_backend)


def test_informed_method_is_significant_on_disk(disk_items, disk_backend):
    rep = sensitivity_report(
        ["gt"],
        ["irof-black"],
        disk_items[:12],
        disk_backend,
        slic_params=SlicParams(target_segments=40),
        run_seed=3,
    )
    cell = rep.cell("gt", "irof-black")
    assert cell.error is None
    assert cell.n == 12
    assert cell.t > 0
    assert cell.p < 1e-3


def test_aoc_statistic_variant(disk_items, disk_backend):
    rep = sensitivity_report(
        ["gt"],
        ["irof-black"],
        disk_items[:6],
        disk_backend,
        slic_params=SlicParams(target_segments=30),
        statistic="aoc",
        run_seed=4,
    )
    cell = rep.cell("gt", "irof-black")
    assert cell.error is None
    assert cell.t > 0 and cell.p < 0.05


def test_cell_errors_are_isolated(disk_items, disk_backend):
    # "missing" has no heatmap anywhere: its cells error, gt's still compute
    rep = sensitivity_report(
        ["gt", "missing"],
        ["irof-black"],
        disk_items[:5],
        disk_backend,
        slic_params=SlicParams(target_segments=25),
    )
    good = rep.cell("gt", "irof-black")
    bad = rep.cell("missing", "irof-black")
    assert good.error is None and good.p is not None
    assert bad.error is not None and bad.p is None
    assert "missing" in bad.error


def test_constant_backend_gives_zero_variance_cells(disk_items):
    rep = sensitivity_report(
        ["gt"],
        ["irof-black"],
        disk_items[:4],
        CallableBackend(lambda data: [0.5, 0.5]),
        slic_params=SlicParams(target_segments=20),
    )
    cell = rep.cell("gt", "irof-black")
    assert cell.p is None
    assert "zero-variance" in cell.error


def test_report_lookup_and_serialization(disk_items, disk_backend, tmp_path):
    rep = sensitivity_report(
        ["gt"],
        ["irof-black", "samek"],
        disk_items[:4],
        disk_backend,
        slic_params=SlicParams(target_segments=20),
        run_seed=9,
    )
    with pytest.raises(KeyError):
        rep.cell("gt", "pixel-black")
    doc = json.loads(report_to_json(rep, extra={"seed": 9}))
    assert doc["config"] == {"seed": 9}
    assert doc["fraction"] == 0.10
    assert len(doc["cells"]) == 2

    csv_path = tmp_path / "report.csv"
    write_report_csv(csv_path, rep)
    with csv_path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    got = rep.cell("gt", "irof-black")
    row = next(r for r in rows if r["evaluator"] == "irof-black")
    if got.p is not None:
        assert float(row["p"]) == got.p  # repr round trip
    plot_path = tmp_path / "plot.csv"
    write_plot_csv(plot_path, rep)
    with plot_path.open() as fh:
        prows = list(csv.DictReader(fh))
    for r in prows:
        assert float(r["log10_p"]) == pytest.approx(
            math.log10(float(r["p"])), rel=1e-12
        )


def test_report_deterministic_across_runs(disk_items, disk_backend):
    kwargs = dict(
        slic_params=SlicParams(target_segments=25), run_seed=5, workers=2
    )
    a = sensitivity_report(["gt"], ["irof-black"], disk_items[:5],
                           disk_backend, **kwargs)
    b = sensitivity_report(["gt"], ["irof-black"], disk_items[:5],
                           disk_backend, **kwargs)
    ca, cb = a.cell("gt", "irof-black"), b.cell("gt", "irof-black")
    assert (ca.t, ca.p, ca.n) == (cb.t, cb.p, cb.n)
