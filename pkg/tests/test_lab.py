import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyea import chain as ch
from noisyea.ea import AlgoConfig, EvalPolicy
from noisyea.lab import (
    CoverTimeResult, ErtRow, ExperimentConfig, GapRow, PntRow, Report, cover_time_path, derive_seed, emit_csv,
    ert_sweep, gap_from_reports, gap_sweep, mean_gap, model_at_level, pnt_scan, read_csv,
)
from noisyea.noise import NoiseKind, NoiseModel
from noisyea.problems import ProblemSpec

from oracles import path_cover_time_exact


def small_cfg(**kw):
    base = dict(spec=ProblemSpec.onemax(3), algo=AlgoConfig(p=1 / 3), runs_per_point=50, budget=10**5, master_seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_optimum_label_costs_exactly_one():
    rep = ert_sweep(small_cfg(model=NoiseModel.one_bit(0.5)))
    row = rep.row(7)
    assert row.mean_evaluations_paper == 1.0 and row.std_error == 0.0
    assert row.success_rate == 1.0
    assert len(rep.rows) == 8


def test_noiseless_sweep_tracks_chain():
    n = 5
    cfg = small_cfg(spec=ProblemSpec.onemax(n), algo=AlgoConfig(p=1 / n), runs_per_point=400)
    rep = ert_sweep(cfg)
    E = ch.efht_solve(ch.noiseless_chain(cfg.spec, 1, 1 / n)).values
    z = [(r.mean_evaluations_paper - (1 + E[bin(int(r.initial_label)).count("1")])) / r.std_error
         for r in rep.rows if r.std_error > 0]
    assert max(abs(v) for v in z) < 4.5
    assert abs(np.mean(z)) * math.sqrt(len(z)) < 4


def test_identical_noise_gives_zero_gap():
    noisy = small_cfg(model=NoiseModel.additive(-1, 1), runs_per_point=300)
    rep = gap_from_reports(ert_sweep(noisy), ert_sweep(dataclasses.replace(noisy, master_seed=6)))
    g, se = mean_gap(rep)
    assert abs(g) <= 3 * se


def test_gap_requires_matching_configs():
    with pytest.raises(ValueError):
        gap_sweep(small_cfg(model=NoiseModel.one_bit(0.5)), small_cfg(runs_per_point=10))


def test_gap_row_values():
    a = Report(ErtRow, [ErtRow("0", 30.0, 1.0, 1.0, 10, 0)])
    b = Report(ErtRow, [ErtRow("0", 20.0, 0.0, 1.0, 10, 0)])
    row = gap_from_reports(a, b).rows[0]
    assert row.gap == pytest.approx(0.5)
    assert row.std_error == pytest.approx(1.0 / 20.0)
    assert row.reliable


def test_uniform_initial_mode():
    rep = ert_sweep(small_cfg(initial="uniform", runs_per_point=20))
    assert [r.initial_label for r in rep.rows] == ["uniform"]


def test_fixed_initial_label_and_validation():
    assert [r.initial_label for r in ert_sweep(small_cfg(initial=3, runs_per_point=5)).rows] == ["3"]
    with pytest.raises(ValueError):
        small_cfg(initial=8)
    with pytest.raises(ValueError):
        small_cfg(initial="random")
    with pytest.raises(ValueError):
        small_cfg(runs_per_point=0)


def test_censored_rows_are_lower_bounds():
    cfg = small_cfg(spec=ProblemSpec.trap(6), algo=AlgoConfig(p=0.05), budget=20, runs_per_point=5, initial=0)
    rep = ert_sweep(cfg)
    assert rep.censored and rep.rows[0].is_lower_bound


def test_experiment_config_round_trip():
    cfg = small_cfg(algo=AlgoConfig(p=0.2, policy=EvalPolicy.REEVAL), model=NoiseModel.multiplicative(0.1, 10),
                    initial="uniform")
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


# -- noise level scans ------------------------------------------------------------------

def test_level_zero_matches_noiseless_runs():
    spec, algo = ProblemSpec.onemax(6), AlgoConfig(p=1 / 6)
    add = pnt_scan(spec, algo, [0.0], [6], 30, 10**5, seed=1, kind=NoiseKind.ADDITIVE)
    mul = pnt_scan(spec, algo, [0.0], [6], 30, 10**5, seed=1, kind=NoiseKind.MULTIPLICATIVE)
    assert add.rows == mul.rows
    # the one-bit coin is still drawn at p_n = 0, so agreement is only in law
    one = pnt_scan(spec, algo, [0.0], [6], 400, 10**5, seed=1).rows[0]
    ref = pnt_scan(spec, algo, [0.0], [6], 400, 10**5, seed=2, kind=NoiseKind.ADDITIVE).rows[0]
    assert abs(one.mean_evals - ref.mean_evals) <= 4 * math.hypot(one.std_error, ref.std_error)


def test_pnt_grid_shape():
    rep = pnt_scan(ProblemSpec.onemax(4), AlgoConfig(p=0.25), [0.0, 0.5], [3, 4], 10, 10**4, seed=0)
    assert [(r.n, r.level) for r in rep.rows] == [(3, 0.0), (3, 0.5), (4, 0.0), (4, 0.5)]
    assert all(r.runs == 10 and 0 <= r.success_rate <= 1 for r in rep.rows)


@pytest.mark.parametrize("kind, level, expected", [
    (NoiseKind.ONE_BIT, 0.3, NoiseModel.one_bit(0.3)),
    (NoiseKind.ADDITIVE, 2.0, NoiseModel.additive(-2.0, 2.0)),
    (NoiseKind.MULTIPLICATIVE, 1.5, NoiseModel.multiplicative(1.0, 2.5)),
])
def test_model_at_level(kind, level, expected):
    assert model_at_level(kind, level) == expected


# -- cover time -------------------------------------------------------------------------------

def test_two_vertices_take_one_step():
    res = cover_time_path(2, 1000, seed=0, start=0)
    assert res.mean == 1.0 and res.std_error == 0.0 and res.bound == 2


def test_three_vertices_from_end():
    assert path_cover_time_exact(3, 0) == pytest.approx(4.0)
    res = cover_time_path(3, 100_000, seed=1, start=0)
    assert abs(res.mean - 4.0) <= 3 * res.std_error


@pytest.mark.parametrize("vertices, start", [(4, 1), (5, 0), (6, 2)])
def test_cover_time_matches_first_step_analysis(vertices, start):
    res = cover_time_path(vertices, 50_000, seed=vertices, start=start)
    assert abs(res.mean - path_cover_time_exact(vertices, start)) <= 4 * res.std_error


@settings(max_examples=15)
@given(st.integers(2, 12), st.integers(0, 2**32))
def test_cover_time_under_bound(vertices, seed):
    res = cover_time_path(vertices, 500, seed)
    assert isinstance(res, CoverTimeResult)
    # the exact expectation from the worst start never exceeds the bound
    assert max(path_cover_time_exact(vertices, s) for s in range(vertices)) <= res.bound
    assert res.mean <= res.bound + 4 * res.std_error


def test_cover_time_rejects_single_vertex():
    with pytest.raises(ValueError):
        cover_time_path(1, 10, 0)


# -- seeds and CSV -------------------------------------------------------------------------------

def test_derive_seed_is_stable_and_separates_keys():
    assert derive_seed(3, 1, 2) == derive_seed(3, 1, 2)
    seeds = {derive_seed(3, v, r) for v in range(16) for r in range(64)}
    assert len(seeds) == 16 * 64
    assert derive_seed(3, 1, 2) != derive_seed(4, 1, 2)


def test_runs_do_not_depend_on_sweep_order():
    a = ert_sweep(small_cfg(initial=5, runs_per_point=10)).rows[0]
    b = ert_sweep(small_cfg(runs_per_point=10)).row(5)
    assert a == b


def test_csv_header_only_for_empty_report(tmp_path):
    path = emit_csv(Report(GapRow), tmp_path / "empty.csv")
    assert path.read_text() == "initial_label,gap,std_error,noisy_censored,noiseless_censored\n"


def test_csv_round_trip_and_reruns_are_byte_identical(tmp_path):
    cfg = small_cfg(runs_per_point=20)
    p1 = emit_csv(ert_sweep(cfg), tmp_path / "a.csv")
    p2 = emit_csv(ert_sweep(cfg), tmp_path / "b.csv")
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "initial_label,mean_evaluations_paper,std_error,success_rate,runs,censored_count"
    assert len(lines) == 1 + 2**3
    back = read_csv(p1, ErtRow)
    assert back.rows == ert_sweep(cfg).rows


def test_pnt_csv_round_trip(tmp_path):
    rep = pnt_scan(ProblemSpec.onemax(3), AlgoConfig(p=0.3), [0.1], [3], 5, 1000, seed=2)
    assert read_csv(emit_csv(rep, tmp_path / "p.csv"), PntRow).rows == rep.rows
