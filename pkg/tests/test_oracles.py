from __future__ import annotations

import random

import numpy as np
import pytest

from causalperm import (
    CiTestConfig,
    Dag,
    DSeparationOracle,
    GaussianMoralOracle,
    InsufficientSamplesError,
    MoralOracle,
    OpCounter,
    moral_oracle,
    moral_subgraph,
    sample_data,
    sem_from_dag,
)

import brute


def random_dag(p: int, rho: float, seed: int) -> Dag:
    return Dag(p, brute.random_dag_edges(p, rho, random.Random(seed)))


# -- factory dispatch --------------------------------------------------------


def test_factory_returns_matching_oracle_kind() -> None:
    dag = random_dag(5, 0.4, 1)
    sem = sem_from_dag(dag, seed=2)
    data = sample_data(sem, n=60, seed=3)
    assert isinstance(moral_oracle(dag), DSeparationOracle)
    assert isinstance(moral_oracle(sem), GaussianMoralOracle)
    assert isinstance(moral_oracle(data), GaussianMoralOracle)


def test_factory_rejects_mismatched_configs() -> None:
    dag = random_dag(5, 0.4, 4)
    sem = sem_from_dag(dag, seed=5)
    data = sample_data(sem, n=60, seed=6)
    with pytest.raises(ValueError):
        moral_oracle(sem, CiTestConfig(mode="fisher-z"))
    with pytest.raises(ValueError):
        moral_oracle(data, CiTestConfig(mode="exact-threshold"))
    with pytest.raises(ValueError):
        moral_oracle(np.zeros(7))


def test_factory_requires_enough_samples() -> None:
    dag = random_dag(6, 0.4, 7)
    sem = sem_from_dag(dag, seed=8)
    with pytest.raises(InsufficientSamplesError):
        moral_oracle(sample_data(sem, n=9, seed=9))
    oracle = moral_oracle(sample_data(sem, n=10, seed=9))
    assert oracle.vertices == frozenset(range(6))


def test_factory_rejects_rank_deficient_data() -> None:
    rng = np.random.default_rng(0)
    data = np.column_stack(
        [np.ones(30), rng.standard_normal(30), rng.standard_normal(30)]
    )
    with pytest.raises(ValueError):
        moral_oracle(data)


# -- exact oracle vs d-separation oracle ---------------------------------------


def trajectory(oracle: MoralOracle, order: list[int]):
    graphs = [oracle.current_graph()]
    deltas = []
    state = oracle
    for k in order:
        state, delta = state.marginalize(k)
        graphs.append(state.current_graph())
        deltas.append(delta)
    return graphs, deltas


def test_exact_oracle_tracks_dsep_oracle() -> None:
    rng = random.Random(23)
    for trial in range(20):
        dag = random_dag(8, rng.choice([0.3, 0.5]), trial)
        sem = sem_from_dag(dag, seed=trial + 100)
        order = list(range(8))
        rng.shuffle(order)
        graphs_d, deltas_d = trajectory(moral_oracle(dag), order[:-1])
        graphs_g, deltas_g = trajectory(moral_oracle(sem), order[:-1])
        assert graphs_d == graphs_g
        assert deltas_d == deltas_g


def test_initial_graph_is_moral_subgraph() -> None:
    dag = random_dag(7, 0.4, 31)
    assert moral_oracle(dag).current_graph() == moral_subgraph(dag, range(7))
    sem = sem_from_dag(dag, seed=32)
    assert moral_oracle(sem).current_graph() == moral_subgraph(dag, range(7))


def test_marginalize_rejects_missing_vertex() -> None:
    dag = random_dag(4, 0.4, 41)
    oracle = moral_oracle(dag)
    smaller, _ = oracle.marginalize(2)
    with pytest.raises(ValueError):
        smaller.marginalize(2)
    sem_oracle = moral_oracle(sem_from_dag(dag, seed=42))
    smaller_g, _ = sem_oracle.marginalize(2)
    with pytest.raises(ValueError):
        smaller_g.marginalize(2)


def test_marginalize_does_not_mutate_parent() -> None:
    dag = random_dag(6, 0.5, 51)
    oracle = moral_oracle(dag)
    before = oracle.current_graph()
    oracle.marginalize(3)
    assert oracle.current_graph() == before
    assert oracle.vertices == frozenset(range(6))


# -- edge deltas -----------------------------------------------------------------


def test_deltas_are_disjoint_and_avoid_removed_vertex() -> None:
    rng = random.Random(61)
    for trial in range(20):
        dag = random_dag(7, 0.45, trial + 200)
        state: MoralOracle = moral_oracle(dag)
        order = sorted(state.vertices)
        rng.shuffle(order)
        for k in order[:-1]:
            before = state.current_graph()
            state, delta = state.marginalize(k)
            after = state.current_graph()
            assert not delta.removed & delta.filled
            assert all(k not in e for e in delta.removed | delta.filled)
            rebuilt = (before.induced(state.vertices).edges() - delta.removed) | delta.filled
            assert rebuilt == after.edges()


# -- operation counting ------------------------------------------------------------


def test_marginalize_charges_quadratic_cost() -> None:
    for build in (
        lambda: moral_oracle(random_dag(6, 0.4, 71)),
        lambda: moral_oracle(sem_from_dag(random_dag(6, 0.4, 71), seed=72)),
    ):
        oracle = build()
        assert oracle.counter.count == 0
        state, _ = oracle.marginalize(0)
        assert oracle.counter.count == 25
        state, _ = state.marginalize(1)
        assert oracle.counter.count == 25 + 16


def test_degree_charges_linear_cost() -> None:
    dag = random_dag(6, 0.4, 81)
    oracle = moral_oracle(dag)
    oracle.degree(2)
    assert oracle.counter.count == 6
    oracle.degree(3)
    assert oracle.counter.count == 12


def test_counter_is_shared_across_clones() -> None:
    dag = random_dag(5, 0.4, 91)
    counter = OpCounter()
    oracle = moral_oracle(dag, counter=counter)
    a, _ = oracle.marginalize(0)
    b, _ = a.marginalize(1)
    assert a.counter is counter and b.counter is counter
    assert counter.count == 16 + 9


# -- sampled-data behaviour -----------------------------------------------------


def test_independent_noise_gives_sparse_graph() -> None:
    rng = np.random.default_rng(12)
    data = rng.standard_normal((4000, 6))
    oracle = moral_oracle(data, CiTestConfig(mode="fisher-z", alpha=0.001))
    assert len(oracle.current_graph().edges()) <= 1


def test_sample_oracle_approaches_truth_with_many_samples() -> None:
    dag = Dag(10, [(i, i + 1) for i in range(9)])
    sem = sem_from_dag(dag, seed=5)
    data = sample_data(sem, n=4000, seed=6)
    est = moral_oracle(data).current_graph()
    truth = moral_subgraph(dag, range(10))
    wrong = est.edges() ^ truth.edges()
    assert len(wrong) <= 1


def test_sample_oracle_marginalizes_without_truth_drift() -> None:
    # strong chain: marginal graphs should stay near the exact ones
    dag = Dag(6, [(i, i + 1) for i in range(5)])
    sem = sem_from_dag(dag, seed=15)
    data = sample_data(sem, n=6000, seed=16)
    noisy = moral_oracle(data)
    exact = moral_oracle(dag)
    for k in (0, 3):
        noisy, _ = noisy.marginalize(k)
        exact, _ = exact.marginalize(k)
        diff = noisy.current_graph().edges() ^ exact.current_graph().edges()
        assert len(diff) <= 1
