import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from rvrp import generator
from rvrp.stats import (
    average_ranks,
    chi2_sf,
    friedman,
    friedman_from_ranks,
    holm,
    mean_sd,
    normal_two_sided_p,
    population_sweep,
    rank_row,
    run_experiment,
    run_seed,
)

REFERENCE_RANKS = (1.2, 2.0667, 2.7333)


def test_mean_sd_constant():
    assert mean_sd([5.0, 5.0, 5.0]) == (5.0, 0.0)


def test_mean_sd_hand_arithmetic():
    mean, sd = mean_sd([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert sd == pytest.approx(1.0)  # n-1 denominator


def test_mean_sd_single_run():
    assert mean_sd([7.0]) == (7.0, 0.0)


def test_mean_sd_empty_rejected():
    with pytest.raises(ValueError):
        mean_sd([])


def test_rank_row_midranks():
    assert rank_row([10.0, 30.0, 20.0]) == [1.0, 3.0, 2.0]
    assert rank_row([10.0, 10.0, 20.0]) == [1.5, 1.5, 3.0]
    assert rank_row([4.0, 4.0, 4.0]) == [2.0, 2.0, 2.0]


def test_friedman_reference_regression():
    result = friedman_from_ranks(REFERENCE_RANKS, n_instances=15)
    assert result.statistic == pytest.approx(17.73, abs=0.01)
    assert result.dof == 2
    assert result.p_value == pytest.approx(0.000141, abs=2e-6)


def test_friedman_all_equal_rows():
    result = friedman([[3.0, 3.0, 3.0], [9.0, 9.0, 9.0]])
    assert result.statistic == pytest.approx(0.0)
    assert result.p_value == pytest.approx(1.0)


def test_friedman_matches_scipy():
    matrix = [
        [51.0, 53.0, 52.0],
        [48.0, 50.0, 49.0],
        [60.0, 61.0, 62.0],
        [55.0, 57.0, 56.0],
        [40.0, 42.0, 41.0],
    ]
    ours = friedman(matrix)
    stat, p = scipy.stats.friedmanchisquare(*[[row[j] for row in matrix] for j in range(3)])
    assert ours.statistic == pytest.approx(stat, rel=1e-12)
    assert ours.p_value == pytest.approx(p, rel=1e-9)


@given(
    st.lists(
        st.lists(
            st.floats(min_value=1.0, max_value=1e6, allow_nan=False, allow_infinity=False),
            min_size=3,
            max_size=3,
            unique=True,
        ),
        min_size=2,
        max_size=8,
    )
)
@settings(max_examples=80, deadline=None)
def test_friedman_invariant_under_monotone_transform(matrix):
    cubed = [[v**3 for v in row] for row in matrix]
    a = friedman(matrix)
    b = friedman(cubed)
    assert a.average_ranks == b.average_ranks
    assert a.statistic == pytest.approx(b.statistic, rel=1e-12)


@pytest.mark.parametrize(
    "x, df, expected, tol",
    [
        (9.21, 2, 0.0100, 1e-4),
        (0.0, 2, 1.0, 0.0),
        (17.73, 2, 0.000141, 2e-6),
    ],
)
def test_chi2_sf_reference_points(x, df, expected, tol):
    assert chi2_sf(x, df) == pytest.approx(expected, abs=tol)


def test_chi2_sf_matches_scipy_within_1e_10():
    for df in range(1, 11):
        for x in (0.01, 0.5, 1.0, 2.5, 5.0, 9.21, 17.73, 30.0, 60.0):
            assert abs(chi2_sf(x, df) - scipy.stats.chi2.sf(x, df)) < 1e-10, (x, df)


def test_chi2_sf_strictly_decreasing():
    grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    for df in (1, 2, 5):
        values = [chi2_sf(x, df) for x in grid]
        assert all(b < a for a, b in zip(values, values[1:]))


def test_normal_two_sided_p_matches_erfc_identity():
    for z in (0.0, 0.5, 1.0, 2.3735, 4.1991):
        assert normal_two_sided_p(z) == pytest.approx(2 * scipy.stats.norm.sf(abs(z)), rel=1e-12)


def test_holm_reference_regression():
    result = holm(REFERENCE_RANKS, n_instances=15, control=0, labels=["dfa", "esa", "ea"])
    by_label = {c.label: c for c in result.comparisons}
    assert by_label["esa"].p_unadjusted == pytest.approx(0.017622, abs=1e-5)
    assert by_label["ea"].p_unadjusted == pytest.approx(0.000027, abs=1e-5)
    assert by_label["ea"].p_adjusted == pytest.approx(0.000054, abs=1e-5)
    assert by_label["esa"].p_adjusted == pytest.approx(0.017622, abs=1e-5)
    assert by_label["ea"].reject_at_05 and by_label["esa"].reject_at_05
    assert [c.label for c in result.comparisons] == ["ea", "esa"]  # ascending p order


def test_holm_properties():
    result = holm([1.0, 2.0, 2.5, 3.5], n_instances=10, control=0)
    ps = [c.p_unadjusted for c in result.comparisons]
    adj = [c.p_adjusted for c in result.comparisons]
    assert all(a >= p for a, p in zip(adj, ps))
    assert all(b >= a for a, b in zip(adj, adj[1:]))
    assert all(c.index != 0 for c in result.comparisons)


def test_holm_control_must_exist():
    with pytest.raises(ValueError):
        holm([1.0, 2.0], n_instances=5, control=2)


def test_population_sweep_ranking_matches_reference_means():
    # mean matrix of a 4-instance x 4-size sweep; ranking row (4, 3, 1.5, 1.5)
    means = [
        [51945.7, 51561.3, 50989.5, 50934.3],
        [57398.7, 56721.8, 56203.8, 56213.7],
        [92990.39, 91663.8, 89512.0, 89531.0],
        [110206.94, 108241.6, 107799.5, 107745.7],
    ]
    assert average_ranks(means) == [4.0, 3.0, 1.5, 1.5]


def test_population_sweep_single_cell():
    inst = generator.small_instance(21, cluster_sizes=(3, 3), forbidden_per_cluster=1)
    report = population_sweep([inst], sizes=[10], runs=1, base_seed=3)
    assert report.average_ranks == [1.0]
    assert len(report.mean_costs) == 1


def test_population_sweep_midranks_on_ties():
    assert average_ranks([[5.0, 5.0, 7.0]]) == [1.5, 1.5, 3.0]


def test_run_seed_is_stable_and_distinct():
    assert run_seed(1, "a", "dfa", 0) == run_seed(1, "a", "dfa", 0)
    assert run_seed(1, "a", "dfa", 0) != run_seed(1, "a", "dfa", 1)
    assert run_seed(1, "a", "dfa", 0) != run_seed(1, "a", "ea", 0)
    assert run_seed(1, "a", "dfa", 0) != run_seed(2, "a", "dfa", 0)


@pytest.fixture(scope="module")
def small_experiment():
    instances = [
        generator.small_instance(21, cluster_sizes=(3, 3), forbidden_per_cluster=1),
        generator.small_instance(30, cluster_sizes=(3, 3), forbidden_per_cluster=1),
    ]
    report = run_experiment(
        instances,
        runs_per_cell=2,
        base_seed=5,
        config_overrides={"population_size": 10},
    )
    return instances, report


def test_experiment_cardinality(small_experiment):
    _, report = small_experiment
    assert sum(len(c.costs) for c in report.cells.values()) == 2 * 3 * 2
    assert report.friedman is not None


def test_experiment_deterministic_rerun(small_experiment):
    instances, report = small_experiment
    again = run_experiment(
        instances, runs_per_cell=2, base_seed=5, config_overrides={"population_size": 10}
    )
    assert again.to_dict() == report.to_dict()


def test_experiment_parallel_matches_serial(small_experiment):
    instances, report = small_experiment
    parallel = run_experiment(
        instances,
        runs_per_cell=2,
        base_seed=5,
        jobs=2,
        config_overrides={"population_size": 10},
    )
    assert parallel.to_dict() == report.to_dict()


def test_experiment_best_found_is_cell_minimum(small_experiment):
    instances, report = small_experiment
    for inst in instances:
        record = report.best_found(inst.name)
        assert record is not None
        cost, vehicles, alg, flat = record
        assert cost == min(
            min(report.cell(inst.name, a).costs) for a in report.algorithms
        )
        assert vehicles == flat.count(0) + 1


def test_experiment_single_algorithm_skips_tests():
    inst = generator.small_instance(21, cluster_sizes=(3, 3), forbidden_per_cluster=1)
    report = run_experiment(
        [inst, inst], algorithms=("dfa",), runs_per_cell=1, base_seed=1,
        config_overrides={"population_size": 8},
    )
    assert report.friedman is None
    assert report.holm is None


def test_experiment_csv_layout(small_experiment):
    _, report = small_experiment
    lines = report.csv_text().strip().splitlines()
    assert lines[0] == "instance,algorithm,run,seed,cost,time_s,convergence_s,vehicles"
    assert len(lines) == 1 + 12


@given(
    st.lists(
        st.lists(
            st.floats(min_value=0.0, max_value=1e9, allow_nan=False, allow_infinity=False),
            min_size=4,
            max_size=4,
        ),
        min_size=1,
        max_size=6,
    )
)
@settings(max_examples=60, deadline=None)
def test_average_ranks_sum_is_conserved(matrix):
    k = 4
    ranks = average_ranks(matrix)
    assert sum(ranks) == pytest.approx(k * (k + 1) / 2, rel=1e-9)
