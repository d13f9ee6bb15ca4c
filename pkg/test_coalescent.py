#!/usr/bin/env python3
"""
Tests for the coalescent simulators, rate tables and the generator
"""
import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from coalescents.coalescent import (GeneralCoagulationSpec, block_count_path, fixation_time,
                                    generator_apply, jump_terms, martingale_residual, rate_table,
                                    simulate_general_coalescent, simulate_m_coalescent,
                                    simulate_poissonian, simulate_simple_poissonian)
from coalescents.data_models import TerminalState
from coalescents.errors import InvalidInputError
from coalescents.measures import MParams
from coalescents.partitions import (DistinguishedPartition, enumerate_partitions, merge_blocks,
                                    restrict)

P = DistinguishedPartition.parse
KINGMAN = MParams.parse("dirac0:1", "dirac0:1")
STAR_TO_ZERO = MParams.parse("dirac:1:1", "0")


def contingency_p_value(samples_a, samples_b):
    counts_a, counts_b = Counter(samples_a), Counter(samples_b)
    support = sorted(set(counts_a) | set(counts_b), key=lambda p: p.to_text())
    table = np.array([[counts_a[p] for p in support], [counts_b[p] for p in support]])
    if table.shape[1] == 1:
        return 1.0
    return stats.chi2_contingency(table)[1]


def is_coarsening(finer: DistinguishedPartition, coarser: DistinguishedPartition) -> bool:
    index = coarser.block_index()
    return all(len({index[i] for i in block}) == 1 for block in finer.blocks)


def test_kingman_total_rate_from_two_singletons():
    terms = jump_terms(KINGMAN, 2)
    assert terms.total == pytest.approx(3.0)
    rows = {(row['b'], row['kind'], row['k']): row for row in rate_table(KINGMAN, 2)}
    assert rows[(2, 'lambda', 2)]['aggregate'] == 1.0
    assert rows[(2, 'r', 1)]['aggregate'] == 2.0
    assert rows[(2, 'r', 2)]['aggregate'] == 0.0


def test_rate_table_for_kingman_lambda1():
    rows = rate_table(MParams.parse("0", "dirac0:1"), 5)
    lambdas = {row['k']: row['rate'] for row in rows if row['b'] == 5 and row['kind'] == 'lambda'}
    assert lambdas == {2: 1.0, 3: 0.0, 4: 0.0, 5: 0.0}
    assert all(row['rate'] == 0.0 for row in rows if row['kind'] == 'r')


def test_horizon_zero_has_no_events(rng):
    traj = simulate_m_coalescent(KINGMAN, 4, rng, horizon=0.0)
    assert traj.events == []
    assert traj.terminal == TerminalState.HORIZON
    assert traj.final == DistinguishedPartition.singletons(4)


def test_trajectory_invariants(rng):
    M = MParams.parse("dirac0:0.5+beta:2:2:1", "dirac0:1+uniform:1")
    for _ in range(200):
        traj = simulate_m_coalescent(M, 6, rng)
        assert traj.absorbed
        times = [t for t, _ in traj.events]
        assert all(a < b for a, b in zip(times, times[1:]))
        states = [traj.initial] + [p for _, p in traj.events]
        for before, after in zip(states, states[1:]):
            assert before != after
            assert is_coarsening(before, after)
        counts = [c for _, c in block_count_path(traj)]
        assert counts[0] == 6 and counts[-1] == 0
        assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_star_to_zero_law(rng):
    """Lambda0 = delta_1: everything joins 0 at rate 1, so P[1 not in block 0 at t] = e^{-t}"""
    replicas = 20_000
    outside = 0
    for _ in range(replicas):
        traj = simulate_m_coalescent(STAR_TO_ZERO, 3, rng, horizon=1.0)
        assert len(traj.events) <= 1
        if traj.events:
            assert traj.final.is_whole
        outside += 1 not in traj.final.distinguished
    expected = math.exp(-1.0)
    se = math.sqrt(expected * (1 - expected) / replicas)
    assert abs(outside / replicas - expected) < 4 * se


def test_fixation_time_of_star_to_zero_is_exponential(rng):
    times = [fixation_time(simulate_m_coalescent(STAR_TO_ZERO, 5, rng)) for _ in range(10_000)]
    assert abs(np.mean(times) - 1.0) < 4 * np.std(times, ddof=1) / math.sqrt(len(times))
    assert stats.kstest(times, 'expon').pvalue > 0.01


def test_fixation_time_edge_cases(rng):
    whole = DistinguishedPartition.whole(4)
    assert fixation_time(simulate_m_coalescent(KINGMAN, 4, rng, start=whole)) == 0.0
    traj = simulate_m_coalescent(MParams.parse("0", "dirac0:1"), 6, rng)
    assert traj.terminal == TerminalState.STALLED
    assert traj.final.non_distinguished_count == 1
    assert fixation_time(traj) is None


def test_zero_measures_never_jump(rng):
    traj = simulate_m_coalescent(MParams.parse("0", "0"), 4, rng)
    assert traj.events == [] and traj.terminal == TerminalState.STALLED
    traj = simulate_simple_poissonian(MParams.parse("0", "0"), 4, rng)
    assert traj.events == [] and traj.terminal == TerminalState.STALLED


def test_start_partition_must_match_ground_size(rng):
    with pytest.raises(InvalidInputError):
        simulate_m_coalescent(KINGMAN, 3, rng, start=DistinguishedPartition.singletons(2))
    with pytest.raises(InvalidInputError):
        simulate_m_coalescent(KINGMAN, -1, rng)


def test_general_spec_parse():
    spec = GeneralCoagulationSpec.parse(0.5, 0.0, "0.2;0.3@1 + 1;@2.5")
    assert spec.total_weight == 3.5
    assert spec.mixture[0][0].dust == pytest.approx(0.5)
    assert spec.to_dict()['mixture'][1]['weight'] == 2.5
    with pytest.raises(InvalidInputError):
        GeneralCoagulationSpec.parse(0, 0, "0.2;0.3")
    with pytest.raises(InvalidInputError):
        GeneralCoagulationSpec.parse(0, 0, "0.2;0.3@0")
    with pytest.raises(InvalidInputError):
        GeneralCoagulationSpec(c0=-1.0)


def test_poissonian_examples(rng):
    merge_all = GeneralCoagulationSpec.parse(mixture=";1@1")
    traj = simulate_poissonian(merge_all, 5, rng)
    assert traj.events[0][1] == P("0|1,2,3,4,5")
    assert traj.terminal == TerminalState.STALLED

    to_zero = GeneralCoagulationSpec.parse(mixture="1;@1")
    traj = simulate_poissonian(to_zero, 5, rng)
    assert len(traj.events) == 1 and traj.absorbed

    with pytest.raises(InvalidInputError):
        simulate_poissonian(GeneralCoagulationSpec(c0=1.0), 3, rng)


def test_poissonian_bernoulli_atoms(rng):
    """(0; 0.5) atoms at rate 1 merge {1} and {2} with probability 1/4 each"""
    spec = GeneralCoagulationSpec.parse(mixture=";0.5@1")
    replicas = 20_000
    merged = sum(simulate_poissonian(spec, 2, rng, horizon=1.0).final == P("0|1,2")
                 for _ in range(replicas))
    expected = 1 - math.exp(-0.25)
    se = math.sqrt(expected * (1 - expected) / replicas)
    assert abs(merged / replicas - expected) < 4 * se


def test_poissonian_restrictions_are_compatible(rng):
    spec = GeneralCoagulationSpec.parse(mixture="0.2;0.4,0.1@1+;0.5,0.5@0.5")
    big = [restrict(simulate_poissonian(spec, 5, rng, horizon=0.7).final, 2) for _ in range(8000)]
    small = [simulate_poissonian(spec, 2, rng, horizon=0.7).final for _ in range(8000)]
    assert contingency_p_value(big, small) > 0.01


def test_general_kingman_matches_m_coalescent(rng):
    spec = GeneralCoagulationSpec(c0=1.0, c1=1.0)
    general = [simulate_general_coalescent(spec, 3, rng, horizon=0.4).final for _ in range(8000)]
    gillespie = [simulate_m_coalescent(KINGMAN, 3, rng, horizon=0.4).final for _ in range(8000)]
    assert contingency_p_value(general, gillespie) > 0.01


def test_zero_tail_atoms_stall_instead_of_spinning(rng):
    for mixture in ("0;0@1", ";0,0,0@2", "0;0@1 + 0;0,0@0.5"):
        spec = GeneralCoagulationSpec.parse(mixture=mixture)
        traj = simulate_general_coalescent(spec, 3, rng)
        assert traj.events == [] and traj.terminal == TerminalState.STALLED
    # a zero-tail atom next to an active one only slows the chain down
    spec = GeneralCoagulationSpec.parse(mixture="0;0@1 + 1;@1")
    traj = simulate_general_coalescent(spec, 3, rng)
    assert traj.absorbed and len(traj.events) == 1


def test_kingman_first_jump_frequencies(rng):
    """From 0|1|..|5 the 10 pair merges and 5 absorptions each have rate 1"""
    start = DistinguishedPartition.singletons(5)
    targets = [merge_blocks(start, [i, j], into_distinguished=False)
               for i in range(1, 6) for j in range(i + 1, 6)]
    targets += [merge_blocks(start, [i], into_distinguished=True) for i in range(1, 6)]
    assert len(set(targets)) == 15

    replicas = 15_000
    counts = Counter(simulate_m_coalescent(KINGMAN, 5, rng).events[0][1] for _ in range(replicas))
    assert set(counts) <= set(targets)
    observed = [counts[p] for p in targets]
    assert stats.chisquare(observed, [replicas / 15] * 15).pvalue > 0.01


def test_gillespie_restrictions_are_compatible(rng):
    M = MParams.parse("dirac0:0.5+dirac:0.6:1", "dirac0:1+beta:2:2:1")
    big = [restrict(simulate_m_coalescent(M, 6, rng, horizon=0.5).final, 3) for _ in range(8000)]
    small = [simulate_m_coalescent(M, 3, rng, horizon=0.5).final for _ in range(8000)]
    assert contingency_p_value(big, small) > 0.01


def test_simple_poissonian_matches_gillespie(rng):
    """nu1 = 4 delta_{1/2} is Lambda1 = delta_{1/2}; the coin flips reproduce lambda_{b,k}"""
    M = MParams.parse("dirac:0.5:0.5", "dirac:0.5:1")
    coins = [simulate_simple_poissonian(M, 3, rng, horizon=0.8).final for _ in range(8000)]
    gillespie = [simulate_m_coalescent(M, 3, rng, horizon=0.8).final for _ in range(8000)]
    assert contingency_p_value(coins, gillespie) > 0.01


def test_gillespie_and_poissonian_constructions_agree(rng):
    M = MParams.parse("dirac:0.6:1", "dirac:0.5:1")
    replicas = 50_000
    coins = [simulate_simple_poissonian(M, 4, rng, horizon=1.0).final for _ in range(replicas)]
    gillespie = [simulate_m_coalescent(M, 4, rng, horizon=1.0).final for _ in range(replicas)]
    assert contingency_p_value(coins, gillespie) > 0.01


def test_simple_poissonian_full_catastrophe(rng):
    traj = simulate_simple_poissonian(STAR_TO_ZERO, 4, rng)
    assert len(traj.events) == 1 and traj.absorbed
    with pytest.raises(InvalidInputError):
        simulate_simple_poissonian(MParams.parse("0", "uniform:1"), 3, rng)


def test_generator_examples():
    assert generator_apply(lambda pi: 1.0, P("0|1|2"), KINGMAN) == 0.0
    blocks = lambda pi: pi.non_distinguished_count  # noqa: E731
    assert generator_apply(blocks, P("0|1|2"), KINGMAN) == pytest.approx(-3.0)
    whole = DistinguishedPartition.whole(3)
    table = {p: float(p.is_whole) for p in enumerate_partitions(3)}
    assert generator_apply(table, whole, KINGMAN) == 0.0
    with pytest.raises(InvalidInputError):
        generator_apply({}, whole, KINGMAN)
    with pytest.raises(InvalidInputError):
        generator_apply(blocks, DistinguishedPartition.singletons(13), KINGMAN)


def test_generator_rows_sum_to_minus_total_rate():
    M = MParams.parse("dirac0:1+uniform:2", "dirac0:0.5+beta:0.5:1.5:1")
    pi = P("0|1|2,3|4")
    here = lambda p: float(p == pi)  # noqa: E731
    assert generator_apply(here, pi, M) == pytest.approx(-jump_terms(M, 3).total)


def test_martingale_residual_is_centred(rng):
    M = MParams.parse("dirac0:0.5+uniform:1", "dirac0:1+beta:2:1:1")
    blocks = lambda pi: pi.non_distinguished_count  # noqa: E731
    residuals = [martingale_residual(simulate_m_coalescent(M, 5, rng, horizon=0.5), blocks, M, 0.5)
                 for _ in range(4000)]
    se = np.std(residuals, ddof=1) / math.sqrt(len(residuals))
    assert abs(np.mean(residuals)) < 4 * se
    traj = simulate_m_coalescent(M, 5, rng, horizon=0.5)
    assert martingale_residual(traj, lambda pi: 2.0, M, 0.5) == 0.0


def test_trajectory_serialisation(rng):
    traj = simulate_m_coalescent(KINGMAN, 3, rng, seed=11)
    record = traj.to_dict()
    assert record['seed'] == 11
    assert record['initial'] == "0|1|2|3"
    assert record['absorbed'] is True and record['horizon'] is None
    assert record['events'][-1]['partition'] == "0,1,2,3"
    first_time = traj.events[0][0]
    assert traj.state_at(first_time / 2) == traj.initial
    assert traj.state_at(first_time) == traj.events[0][1]
