import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forestlll.core import Domain, ElementaryEvent, Instance, MonochromaticEvent, RepetitionEvent, occurs
from forestlll.criteria import check_cell, search_weights
from forestlll.solvers import (
    Record,
    bad_atoms,
    entropy_compression,
    forest_algorithm,
    moser_tardos_resampling,
    trial_rng,
    trial_seed,
)


def random_instance(seed, m=7, k=3, n_events=8):
    rng = np.random.default_rng(seed)
    events = []
    for _ in range(n_events):
        kind = int(rng.integers(3))
        if kind == 0:
            size = int(rng.integers(1, 3))
            sup = tuple(int(x) for x in rng.choice(m, size, replace=False))
            events.append(ElementaryEvent(sup, values=tuple(int(v) for v in rng.integers(0, k, size))))
        elif kind == 1:
            sup = tuple(int(x) for x in rng.choice(m, 2, replace=False))
            events.append(MonochromaticEvent(sup))
        else:
            sup = tuple(int(x) for x in rng.choice(m, 4, replace=False))
            events.append(RepetitionEvent(sup))
    return Instance.uniform(m, k, events)


def avoids_all(inst, cfg):
    return not any(occurs(e, cfg, inst.labels) for e in inst.events)


def test_trial_seeds_are_deterministic_and_distinct():
    assert trial_seed(3, 5) == trial_seed(3, 5)
    seeds = {trial_seed(3, t) for t in range(1000)}
    assert len(seeds) == 1000
    a, _ = trial_rng(1, 2)
    b, _ = trial_rng(1, 2)
    assert a.integers(1 << 60) == b.integers(1 << 60)


# -- resampling baseline


def test_mt_empty_family():
    inst = Instance.uniform(4, 3, [])
    cfg, st_ = moser_tardos_resampling(inst, np.random.default_rng(0))
    assert st_.steps == 0 and st_.success
    assert np.array_equal(cfg, Instance.uniform(4, 3, []).sample(np.random.default_rng(0)))


def test_mt_single_event_geometric():
    inst = Instance.uniform(2, 2, [ElementaryEvent((0,), values=(1,))])
    steps = []
    for t in range(10_000):
        rng, _ = trial_rng(11, t)
        cfg, st_ = moser_tardos_resampling(inst, rng)
        assert cfg[0] != 1
        steps.append(st_.steps)
    # steps = number of failed draws before a success: mean 1, variance 2
    assert abs(np.mean(steps) - 1.0) <= 3 * math.sqrt(2 / len(steps))


def test_mt_mean_steps_within_weight_sum():
    events = [MonochromaticEvent((i, i + 1)) for i in range(9)]
    inst = Instance.uniform(10, 6, events)
    w = search_weights(inst, "lll")
    assert check_cell(inst, w).get("cell").holds
    bound = sum(w.values())
    steps = np.array([moser_tardos_resampling(inst, trial_rng(5, t)[0])[1].steps for t in range(4000)])
    assert steps.mean() <= bound + 3 * steps.std(ddof=1) / math.sqrt(len(steps))


def test_step_cap_failure_is_reported():
    # every value of atom 0 is forbidden: nothing can succeed
    inst = Instance.uniform(2, 2, [ElementaryEvent((0,), values=(0,)), ElementaryEvent((0,), values=(1,))])
    _, st_ = moser_tardos_resampling(inst, np.random.default_rng(0), step_cap=50)
    assert not st_.success and st_.steps == 50
    _, rec, st_ = forest_algorithm(inst, np.random.default_rng(0), step_cap=50)
    assert not st_.success and not rec.terminated and len(rec.steps) == 50


# -- forest algorithm


def test_forest_empty_family():
    cfg, rec, st_ = forest_algorithm(Instance.uniform(3, 2, []), np.random.default_rng(0))
    assert rec.steps == [] and rec.phase_starts == [] and st_.success and rec.terminated


def test_forest_single_elementary_event_phases():
    inst = Instance.uniform(1, 2, [ElementaryEvent((0,), values=(0,))])
    lengths = []
    for t in range(400):
        _, rec, st_ = forest_algorithm(inst, trial_rng(0, t)[0])
        # repeated failures recurse inside the first call, so at most one phase
        assert st_.phases <= inst.m
        assert rec.phase_starts == ([0] if rec.steps else [])
        assert all(step == (0, 0) for step in rec.steps)
        lengths.append(len(rec.steps))
    assert max(lengths) >= 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_forest_output_valid_and_lemma_holds(seed):
    inst = random_instance(seed)
    rng, s = trial_rng(seed, 0)
    cfg, rec, st_ = forest_algorithm(inst, rng, step_cap=20_000, instrument=True, rng_seed=s)
    if st_.success:
        assert avoids_all(inst, cfg)
    assert st_.lemma_violations == 0
    assert st_.phases <= inst.m
    assert rec.phase_starts == sorted(set(rec.phase_starts))
    assert not rec.phase_starts or rec.phase_starts[0] == 0
    for x, e in rec.steps:
        assert x in inst.events[e].atoms
    # phase roots increase strictly
    roots = [rec.steps[i][0] for i in rec.phase_starts]
    assert roots == sorted(set(roots))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_forest_deterministic_given_seed(seed):
    inst = random_instance(seed)
    a = forest_algorithm(inst, np.random.default_rng(seed), step_cap=5000)[1]
    b = forest_algorithm(inst, np.random.default_rng(seed), step_cap=5000)[1]
    assert a.steps == b.steps and a.phase_starts == b.phase_starts


def test_forest_resamples_only_the_region():
    # repetition on (0,1,2,3) queried at atom 0 must keep the seed half {2,3}
    inst = Instance.uniform(5, 3, [RepetitionEvent((0, 1, 2, 3))])
    for t in range(300):
        rng, _ = trial_rng(9, t)
        start = inst.sample(np.random.default_rng(trial_seed(9, t)))
        cfg, rec, _ = forest_algorithm(inst, rng)
        if rec.steps:
            assert rec.steps[0] == (0, 0)
            # atoms 2, 3 are never resampled, so they keep their first draw
            assert cfg[2] == start[2] and cfg[3] == start[3]


def test_record_roundtrip():
    inst = random_instance(4)
    _, rec, _ = forest_algorithm(inst, np.random.default_rng(4), rng_seed=4)
    text = rec.dumps()
    assert text.splitlines()[1] == "# phase step atom event"
    back = Record.loads(text)
    assert back.steps == rec.steps and back.phase_starts == rec.phase_starts
    assert back.rng_seed == 4 and back.terminated == rec.terminated


def test_all_solvers_on_non_uniform_domains():
    inst = Instance([Domain(3, (0.5, 0.25, 0.25))] * 4, [MonochromaticEvent((0, 1)), MonochromaticEvent((2, 3))])
    for t in range(50):
        cfg, _, st_ = forest_algorithm(inst, trial_rng(2, t)[0])
        assert st_.success and avoids_all(inst, cfg)
        cfg, st_ = moser_tardos_resampling(inst, trial_rng(3, t)[0])
        assert st_.success and avoids_all(inst, cfg)
    with pytest.raises(ValueError):
        entropy_compression(inst, np.random.default_rng(0), 10)


# -- bad atoms


def test_bad_atoms_examples():
    inst = Instance.uniform(5, 3, [MonochromaticEvent((0, 1)), MonochromaticEvent((1, 2)), MonochromaticEvent((3, 4))])
    assert bad_atoms(inst, [0, 1, 2, 0, 1]) == frozenset()
    assert bad_atoms(inst, [0, 0, 2, 0, 1]) == {0, 1}
    assert bad_atoms(inst, [0, 0, 0, 0, 1]) == {0, 1, 2}


# -- entropy compression


def test_entropy_empty_family():
    cfg, tr = entropy_compression(Instance.uniform(4, 2, []), np.random.default_rng(0), 4)
    assert tr.success and tr.used_entries == 4 and cfg is not None


def test_entropy_deterministic_vector_and_flaws():
    inst = Instance.uniform(3, 2, [MonochromaticEvent((0, 1)), MonochromaticEvent((1, 2))])
    vec = [0, 0, 1, 0, 1, 1, 0]
    a = entropy_compression(inst, None, 7, vector=vec, verify=True)
    b = entropy_compression(inst, None, 7, vector=vec, verify=True)
    assert a[1].steps == b[1].steps
    # step 2 colors atom 1 with 0 = atom 0's color: flaw 0, region {1} is uncolored
    assert a[1].steps[1] == (1, 0, 0)
    assert a[1].steps[2] == (1, 1, -1)
    assert a[1].flaw_violations == 0
    assert a[1].success and list(a[0]) == [0, 1, 0]


def test_entropy_failure_when_vector_short():
    inst = Instance.uniform(3, 2, [MonochromaticEvent((0, 1))])
    cfg, tr = entropy_compression(inst, None, 2, vector=[0, 0])
    assert cfg is None and not tr.success


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_entropy_intermediate_colorings_avoid_flaws(seed):
    inst = random_instance(seed, k=4)
    cfg, tr = entropy_compression(inst, np.random.default_rng(seed), 60 * inst.m, verify=True)
    assert tr.flaw_violations == 0
    if tr.success:
        assert avoids_all(inst, cfg)
