import numpy as np
import pytest

from causalmedian import Dataset, ModelSpec, build_design, potential_design

from conftest import random_dataset


def small_dataset():
    return Dataset(
        outcome=np.array([1.0, 2.0, 3.0, 4.0]),
        exposure=np.array([0.0, 1.0, 0.0, 1.0]),
        confounders=np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0]]),
        confounder_names=("c1", "c2"),
    )


def test_dataset_basic_properties():
    data = small_dataset()
    assert data.n == 4
    np.testing.assert_array_equal(data.confounder("c2"), [10.0, 20.0, 30.0, 40.0])


def test_dataset_unknown_confounder():
    with pytest.raises(ValueError, match="c9"):
        small_dataset().confounder("c9")


def test_dataset_subset_reindexes_everything():
    data = small_dataset()
    sub = data.subset(np.array([3, 0, 3]))
    np.testing.assert_array_equal(sub.outcome, [4.0, 1.0, 4.0])
    np.testing.assert_array_equal(sub.exposure, [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(sub.confounders[:, 0], [4.0, 1.0, 4.0])
    assert sub.confounder_names == ("c1", "c2")


def test_dataset_subset_rejects_non_integer_indices():
    with pytest.raises(ValueError):
        small_dataset().subset(np.array([0.5, 1.0]))


def test_dataset_rejects_nonbinary_exposure():
    with pytest.raises(ValueError):
        Dataset(np.ones(3), np.array([0.0, 2.0, 1.0]), np.ones((3, 1)), ("c1",))


def test_dataset_allows_single_arm():
    # bootstrap resamples may lose an arm; the container stays valid
    data = Dataset(np.ones(3), np.zeros(3), np.ones((3, 1)), ("c1",))
    assert data.n == 3


def test_dataset_rejects_nonfinite_outcome():
    with pytest.raises(ValueError):
        Dataset(np.array([1.0, np.nan]), np.array([0.0, 1.0]), np.ones((2, 1)), ("c1",))


def test_dataset_name_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones(2), np.array([0.0, 1.0]), np.ones((2, 2)), ("c1", "c1"))
    with pytest.raises(ValueError):
        Dataset(np.ones(2), np.array([0.0, 1.0]), np.ones((2, 2)), ("c1",))


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec("wrong-kind")
    with pytest.raises(ValueError):
        ModelSpec("propensity", ("c1",), interactions=("c1",))
    with pytest.raises(ValueError):
        ModelSpec("outcome", ("c1", "c1"))
    with pytest.raises(ValueError):
        ModelSpec("outcome", ("c1",), outcome_transform="sqrt")


def test_build_design_column_layout():
    data = small_dataset()
    spec = ModelSpec("outcome", ("c1", "c2"), ("c2",), "log")
    design = build_design(data, spec)
    assert design.column_labels == ("intercept", "a", "c1", "c2", "a:c2")
    np.testing.assert_array_equal(design.values[:, 0], np.ones(4))
    np.testing.assert_array_equal(design.values[:, 1], data.exposure)
    np.testing.assert_array_equal(design.values[:, 4], data.exposure * data.confounder("c2"))


def test_build_design_propensity_has_no_exposure_column():
    data = small_dataset()
    design = build_design(data, ModelSpec("propensity", ("c1",)))
    assert design.column_labels == ("intercept", "c1")


def test_potential_design_forces_exposure():
    data = small_dataset()
    spec = ModelSpec("outcome", ("c1",), ("c1",), "log")
    at_one = potential_design(data, spec, 1)
    at_zero = potential_design(data, spec, 0)
    np.testing.assert_array_equal(at_one[:, 1], np.ones(4))
    np.testing.assert_array_equal(at_zero[:, 1], np.zeros(4))
    # interaction column follows the forced exposure
    np.testing.assert_array_equal(at_one[:, 3], data.confounder("c1"))
    np.testing.assert_array_equal(at_zero[:, 3], np.zeros(4))


def test_potential_design_rejects_propensity_and_bad_level():
    data = small_dataset()
    with pytest.raises(ValueError):
        potential_design(data, ModelSpec("propensity", ("c1",)), 1)
    with pytest.raises(ValueError):
        potential_design(data, ModelSpec("outcome", ("c1",)), 2)


def test_random_dataset_round_trip_shapes():
    data = random_dataset(np.random.default_rng(0), n=25, num_confounders=4)
    assert data.n == 25
    assert data.confounders.shape == (25, 4)
    spec = ModelSpec("quantile", data.confounder_names)
    assert build_design(data, spec).values.shape == (25, 6)
