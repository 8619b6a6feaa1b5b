import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochepi.distributions import derive_stream, make_rng
from stochepi.engine import (
    EpidemicState,
    align_to_threshold,
    detect_intervention,
    init_state,
    run,
    step_day,
)
from stochepi.model import InterventionPolicy, validate_scenario

from conftest import make_scenario

COMPARTMENT_COLUMNS = ("S_G", "E_G", "I_G", "R_G", "S_O", "E_O", "I_O", "R_O", "new_inf_G", "new_inf_other")


def check_invariants(traj, cfg):
    d = traj.data
    n_g, n_o = cfg.population.n_g, cfg.population.n_other
    assert np.all(d["S_G"] + d["E_G"] + d["I_G"] + d["R_G"] == n_g)
    assert np.all(d["S_O"] + d["E_O"] + d["I_O"] + d["R_O"] == n_o)
    for col in COMPARTMENT_COLUMNS:
        assert np.all(d[col] >= 0), col
    for grp, new in (("G", "new_inf_G"), ("O", "new_inf_other")):
        s, r = d[f"S_{grp}"], d[f"R_{grp}"]
        assert np.all(np.diff(s) <= 0)
        assert np.all(np.diff(r) >= 0)
        # every drop in S is a recorded new infection of that day
        assert np.array_equal(-np.diff(s), d[new][:-1])
    assert d["new_inf_G"][-1] == 0 and d["new_inf_other"][-1] == 0
    assert np.all(np.diff(d["phase"]) >= 0)
    assert np.array_equal(traj.days, np.arange(len(traj)))
    assert len(traj) <= cfg.t_max_days + 1
    final_active = d["E_G"][-1] + d["E_O"][-1] + d["I_G"][-1] + d["I_O"][-1]
    assert final_active == 0 or len(traj) == cfg.t_max_days + 1


_phase = st.fixed_dictionaries({
    "trigger_s_fraction": st.floats(0.3, 0.99), "c": st.floats(0.05, 1.0), "r0_prime": st.floats(0.2, 4.0),
})


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(200, 4000), alpha=st.floats(0.05, 0.6), r0=st.floats(0.0, 5.0),
    inc=st.sampled_from([0.0, 0.5, 3.0, 7.0]), k=st.integers(1, 4), mean=st.floats(3, 30),
    phases=st.lists(_phase, max_size=1), release=st.one_of(st.none(), st.integers(0, 40)),
    seed=st.integers(0, 2**32), t_max=st.integers(1, 300),
)
def test_trajectory_invariants(n, alpha, r0, inc, k, mean, phases, release, seed, t_max):
    if phases and release is not None:
        phases = phases + [{"trigger_day_offset": release, "r0_prime": 2.0, "c": 1.0}]
    cfg = make_scenario(
        n, alpha, phases,
        disease={"r0": r0, "incubation_mean_days": inc, "erlang_k": k, "erlang_rate_per_day": k / mean},
        run={"t_max_days": t_max, "seed_infected_fraction": 0.004, "plot_threshold_fraction": 0.01},
    )
    traj = run(cfg, make_rng(seed))
    check_invariants(traj, cfg)
    if phases:
        x = phases[0]["trigger_s_fraction"]
        frac = traj.S / cfg.n_total
        if traj.t0_day is None:
            assert np.all(frac[:-1] > x)
        else:
            t0 = traj.t0_day
            assert frac[t0] <= x and np.all(frac[:t0] > x)
            assert traj.data["phase"][t0] >= 1 and np.all(traj.data["phase"][:t0] == 0)


def test_reference_scenario_invariants():
    cfg = make_scenario(100_000, 0.2, [{"trigger_s_fraction": 0.9, "c": 0.25, "r0_prime": 2.5}])
    for i in range(5):
        check_invariants(run(cfg, derive_stream(make_rng(3), i)), cfg)


def test_runs_are_deterministic():
    cfg = make_scenario(20_000)
    a, b = run(cfg, make_rng(99)), run(cfg, make_rng(99))
    for col in a.data:
        assert np.array_equal(a.data[col], b.data[col])
    c = run(cfg, make_rng(100))
    assert not np.array_equal(a.I, c.I)


def test_noop_intervention_changes_nothing_but_the_phase_label():
    base = make_scenario(50_000)
    noop = make_scenario(50_000, phases=[{"trigger_s_fraction": 0.9, "c": 1.0, "r0_prime": 2.5}])
    a, b = run(base, make_rng(21)), run(noop, make_rng(21))
    assert len(a) == len(b)
    for col in COMPARTMENT_COLUMNS:
        assert np.array_equal(a.data[col], b.data[col]), col
    assert b.data["phase"].max() == 1


def test_zero_r0_freezes_susceptibles():
    cfg = make_scenario(10_000, disease={"r0": 0.0})
    traj = run(cfg, make_rng(4))
    assert np.all(traj.S == traj.S[0])
    assert traj.S[0] == 10_000 - 10
    assert np.all(traj.data["new_inf_G"] == 0) and np.all(traj.data["new_inf_other"] == 0)
    assert traj.I[-1] == 0 and traj.R[-1] == 10


def test_subcritical_epidemic_stays_small():
    cfg = make_scenario(100_000, disease={"r0": 0.5})
    attack = [1 - run(cfg, derive_stream(make_rng(5), i)).S[-1] / 100_000 for i in range(30)]
    # branching-process final size from 100 seeds is about 100/(1-0.5) persons
    assert max(attack) < 0.05
    assert np.mean(attack) == pytest.approx(0.002, abs=0.001)


def test_extinction_is_absorbing():
    cfg = make_scenario(1_000)
    state = init_state(cfg, make_rng(6))
    state.infectious[:] = 0
    state.removed[:] = state.group_sizes - state.susceptible
    assert state.is_extinct()
    before = (state.susceptible.copy(), state.removed.copy())
    for _ in range(10):
        rec = step_day(state, cfg.disease, cfg.policy, make_rng(6))
        assert rec.new_inf_G == rec.new_inf_other == 0
    assert np.array_equal(state.susceptible, before[0]) and np.array_equal(state.removed, before[1])
    assert state.infectious.sum() == 0 and state.exposed.sum() == 0


def test_seed_count_and_group_split():
    cfg = make_scenario(100_000, 0.2)
    in_g = []
    for i in range(400):
        st_ = init_state(cfg, derive_stream(make_rng(7), i))
        assert st_.infectious.sum() == 100 and st_.exposed.sum() == 0
        assert np.all(st_.infectious[:, 0] == 0)
        in_g.append(int(st_.infectious[0].sum()))
    # Binomial(100, 0.2): mean 20, sd 4, so the mean of 400 has sd 0.2
    assert abs(np.mean(in_g) - 20) < 0.8


def test_seed_fraction_rounding_to_zero_clamps_to_one():
    cfg = make_scenario(100, 0.2, run={"seed_infected_fraction": 0.001, "plot_threshold_fraction": 0.05})
    assert init_state(cfg, make_rng(0)).infectious.sum() == 1


def test_seed_count_must_leave_susceptibles():
    cfg = make_scenario(2, 0.5, run={"seed_infected_fraction": 0.6, "plot_threshold_fraction": 0.9})
    with pytest.raises(ValueError):
        init_state(cfg, make_rng(0))


def test_uk_group_partition():
    cfg = make_scenario(66_410, 0.132)
    assert cfg.population.n_g == 8766
    state = init_state(cfg, make_rng(1))
    assert state.group_sizes.tolist() == [8766, 66_410 - 8766]


def test_daily_attempts_target_group_by_share():
    cfg = make_scenario(100_000_000, 0.2, run={"seed_infected_fraction": 0.0001, "plot_threshold_fraction": 0.001})
    state = init_state(cfg, make_rng(8))
    rec = step_day(state, cfg.disease, cfg.policy, make_rng(9))
    total = rec.new_inf_G + rec.new_inf_other
    # about beta * 1e4 = 1190 attempts, all landing on susceptibles
    assert total == pytest.approx(10_000 * 2.5 / 21, rel=0.1)
    assert abs(rec.new_inf_G / total - 0.2) < 0.04


def test_zero_incubation_skips_exposed():
    cfg = make_scenario(20_000, disease={"incubation_mean_days": 0})
    traj = run(cfg, make_rng(10))
    assert np.all(traj.E == 0)
    assert traj.R[-1] > 1000


def _state(s, n=1000, active=0):
    return EpidemicState(
        day=0, group_sizes=np.array([200, n - 200]), susceptible=np.array([s // 5, s - s // 5]),
        exposed=np.zeros((2, 4), np.int64), infectious=np.zeros((2, 4), np.int64),
        removed=np.array([200 - s // 5, n - 200 - (s - s // 5)]), active_phase=active,
    )


@pytest.mark.parametrize("s, active, expected", [(900, 0, True), (901, 0, False), (500, 0, True), (500, 1, False)])
def test_detect_intervention_boundaries(s, active, expected):
    assert detect_intervention(_state(s, active=active), 0.9) is expected


def test_alignment_starts_at_first_threshold_day():
    cfg = make_scenario(50_000)
    traj = run(cfg, make_rng(11))
    prev = traj.I / cfg.n_total
    first = next(t for t, p in enumerate(prev) if p >= 0.005)
    aligned = align_to_threshold(traj, 0.005)
    assert aligned.offset == first and aligned.threshold_day == 0
    assert len(aligned) == len(traj) - first
    assert np.array_equal(aligned.I, traj.I[first:])
    assert aligned.I[0] / cfg.n_total >= 0.005 and traj.I[first - 1] / cfg.n_total < 0.005


def test_alignment_of_a_fizzled_run_is_empty():
    cfg = make_scenario(10_000, disease={"r0": 0.0})
    aligned = align_to_threshold(run(cfg, make_rng(1)), 0.005)
    assert len(aligned) == 0 and not aligned.threshold_reached


def test_extended_holds_final_state():
    cfg = make_scenario(5_000)
    traj = run(cfg, make_rng(2))
    longer = traj.extended(len(traj) + 20)
    assert np.all(longer.S[len(traj):] == traj.S[-1])
    assert np.all(longer.data["new_inf_G"][len(traj):] == 0)
    check_invariants(replace(longer), replace(cfg, t_max_days=len(longer) + 1))


def test_uninterrupted_final_susceptible_fraction():
    cfg = make_scenario(100_000)
    final = [run(cfg, derive_stream(make_rng(12), i)).S[-1] / 1e5 for i in range(30)]
    assert np.mean(final) == pytest.approx(0.10, abs=0.02)
