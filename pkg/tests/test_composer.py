import numpy as np
import pytest

from stochepi.composer import (
    PlanError,
    Subpopulation,
    SubpopulationPlan,
    compose,
    compose_replicate,
    peak_prevalence,
    set_path,
)
from stochepi.distributions import derive_stream, make_rng
from stochepi.engine import align_to_threshold, run
from stochepi.oracle import mean_field_run

from conftest import make_scenario

BASE = make_scenario(10_000, disease={"incubation_mean_days": 0})


def plan(*subs):
    return SubpopulationPlan(BASE, tuple(Subpopulation(*s) for s in subs))


def test_single_component_is_a_plain_aligned_run():
    stream = make_rng(5)
    agg = compose_replicate(plan(("only", 10_000, 0)), stream)
    ref = align_to_threshold(run(BASE, derive_stream(stream, 0)), BASE.plot_threshold_fraction)
    assert len(agg) == len(ref)
    for col in ref.data:
        assert np.array_equal(agg.data[col], ref.data[col]), col


def test_aggregate_is_the_sum_of_shifted_components():
    p = plan(("a", 6_000, 0), ("b", 3_000, 20), ("c", 1_000, 45))
    stream = make_rng(9)
    agg = compose_replicate(p, stream)
    scenarios = p.scenarios()
    manual_i = np.zeros(len(agg))
    manual_s = np.zeros(len(agg))
    for m, (sub, cfg) in enumerate(zip(p.subpopulations, scenarios)):
        comp = align_to_threshold(run(cfg, derive_stream(stream, m)), cfg.plot_threshold_fraction)
        for t in range(len(agg)):
            local = t - sub.start_offset_days
            if local < 0:
                manual_s[t] += sub.size
            else:
                k = min(local, len(comp) - 1)
                manual_i[t] += comp.I[k]
                manual_s[t] += comp.S[k]
    assert np.array_equal(agg.I, manual_i)
    assert np.array_equal(agg.S, manual_s)
    assert np.all(agg.S + agg.E + agg.I + agg.R == 10_000)
    assert agg.n_total == 10_000 and agg.offsets == (0, 20, 45)


def test_flattening_for_identical_components():
    single = peak_prevalence(align_to_threshold(mean_field_run(BASE), 0.005))[1]
    p = plan(("a", 10_000, 0), ("b", 10_000, 50))
    agg = compose_replicate(p, make_rng(0), simulate=lambda cfg, _: mean_field_run(cfg))
    assert agg.deterministic
    assert peak_prevalence(agg)[1] < single
    same_start = compose_replicate(plan(("a", 10_000, 0), ("b", 10_000, 0)), make_rng(0),
                                   simulate=lambda cfg, _: mean_field_run(cfg))
    assert peak_prevalence(same_start)[1] == pytest.approx(single)


def test_component_that_never_takes_off_contributes_its_final_state():
    dead = SubpopulationPlan(BASE, (
        Subpopulation("live", 10_000, 0),
        Subpopulation("dead", 5_000, 10, {"disease.r0": 0.0}),
    ))
    agg = compose_replicate(dead, make_rng(3))
    assert np.all(agg.S + agg.E + agg.I + agg.R == 15_000)
    assert np.all(agg.data["new_inf_G"][-1:] == 0)
    # 5 seeds of the dead component all end removed
    assert agg.R[0] >= 5


def test_overrides_apply_per_subpopulation():
    p = SubpopulationPlan(BASE, (Subpopulation("a", 1000, 0), Subpopulation("b", 2000, 0, {"disease.r0": 1.5})))
    a, b = p.scenarios()
    assert a.disease.r0 == 2.5 and b.disease.r0 == 1.5
    assert (a.n_total, b.n_total) == (1000, 2000) and p.n_total == 3000


@pytest.mark.parametrize("subs", [
    (),
    (("a", 100, 0), ("a", 100, 5)),
    (("a", 0, 0),),
    (("a", 100, -1),),
])
def test_invalid_plans(subs):
    with pytest.raises(PlanError):
        plan(*subs)


def test_sequential_and_parallel_compose_agree():
    p = plan(("a", 5_000, 0), ("b", 5_000, 7))
    seq = compose(p, 4, 3, workers=1)
    par = compose(p, 4, 3, workers=2)
    for x, y in zip(seq, par):
        for col in x.data:
            assert np.array_equal(x.data[col], y.data[col])


def test_peak_prevalence_examples():
    assert peak_prevalence([0.1, 0.3, 0.3, 0.2]) == (1, 0.3)
    assert peak_prevalence(np.array([0.0])) == (0, 0.0)
    with pytest.raises(ValueError):
        peak_prevalence([])


def test_set_path():
    raw = {"policy": {"phases": [{"c": 1.0}]}}
    set_path(raw, "policy.phases.0.c", 0.5)
    set_path(raw, "policy.phases.1.r0_prime", 1.0)
    set_path(raw, "disease.r0", 2.0)
    assert raw == {"policy": {"phases": [{"c": 0.5}, {"r0_prime": 1.0}]}, "disease": {"r0": 2.0}}
