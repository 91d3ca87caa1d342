import warnings

import numpy as np
import pytest

from conftest import make_dataset
from mpcafd.condition_bank import (
    ModelBank,
    PriorKey,
    derive_prior_conditions,
    fit_bank,
    kmeans_refine,
    match_condition,
)
from mpcafd.config import GlobalConfig
from mpcafd.errors import InsufficientSamplesError, PriorKnowledgeError, SchemaError
from mpcafd.preprocess import apply_standardization, fit_standardization

KEYS = {
    1: ("2 chillers,5 pumps", "monsoon_alternating", "working_time"),
    2: ("2 chillers,4 pumps", "monsoon_alternating", "working_time"),
    3: ("1 chillers,2 pumps", "monsoon_alternating", "rest_time"),
}


def tagged(values, labels):
    meta = {t: [KEYS[c][i] for c in labels] for i, t in enumerate(("units_running", "climate", "occupancy"))}
    return make_dataset(values, meta=meta)


def blobs(rng, sizes, sep=12.0, m=4):
    centers = np.eye(len(sizes), m) * sep
    x = np.vstack([c + rng.standard_normal((n, m)) for c, n in zip(centers, sizes)])
    labels = np.repeat(np.arange(1, len(sizes) + 1), sizes)
    return x, labels


class TestPriorKey:
    def test_valid(self):
        key = PriorKey(*KEYS[1])
        assert key.to_dict()["climate"] == "monsoon_alternating"

    @pytest.mark.parametrize("args", [("", "dry", "rest_time"), ("a", "snowy", "rest_time"), ("a", "dry", "night")])
    def test_invalid(self, args):
        with pytest.raises(PriorKnowledgeError):
            PriorKey(*args)


class TestDerivePrior:
    def test_three_tuples(self):
        x, labels = blobs(np.random.default_rng(0), [100, 100, 100])
        part = derive_prior_conditions(tagged(x, labels))
        assert part.k == 3
        assert np.array_equal(part.labels, labels)
        assert part.keys[2] == PriorKey(*KEYS[3])

    def test_single_tuple(self):
        x, _ = blobs(np.random.default_rng(1), [80])
        assert derive_prior_conditions(tagged(x, [1] * 80)).k == 1

    def test_small_condition_merged(self):
        x, labels = blobs(np.random.default_rng(2), [100, 100, 5], m=6)
        with pytest.warns(UserWarning, match="merged"):
            part = derive_prior_conditions(tagged(x, labels))
        assert part.k == 2
        assert part.merged == {PriorKey(*KEYS[3]): part.keys[int(np.bincount(part.labels[-5:]).argmax()) - 1]}
        assert part.labels.size == 205

    def test_missing_tag(self):
        with pytest.raises(PriorKnowledgeError):
            derive_prior_conditions(make_dataset(np.zeros((5, 2)) + np.arange(5)[:, None]))


class TestKmeans:
    def test_correct_priors_are_fixed_point(self):
        x, labels = blobs(np.random.default_rng(3), [150, 150, 150])
        a = kmeans_refine(x, labels)
        assert np.array_equal(a.labels, labels)
        assert a.n_iter == 0

    def test_recovers_corrupted_labels(self):
        rng = np.random.default_rng(4)
        x, truth = blobs(rng, [500, 500], sep=8.0 / np.sqrt(2))  # centers 8 sigma apart
        noisy = truth.copy()
        flip = rng.choice(truth.size, truth.size // 20, replace=False)
        noisy[flip] = 3 - noisy[flip]
        a = kmeans_refine(x, noisy)
        assert np.mean(a.labels == truth) >= 0.99

    def test_single_cluster(self):
        x = np.random.default_rng(5).standard_normal((50, 3))
        a = kmeans_refine(x, np.ones(50, dtype=int))
        assert a.k == 1 and np.all(a.labels == 1) and a.n_iter == 0

    def test_objective_non_increasing_and_partition(self):
        rng = np.random.default_rng(6)
        x, truth = blobs(rng, [200, 200, 200], sep=3.0)
        start = rng.integers(1, 4, size=600)
        start[:3] = [1, 2, 3]
        a = kmeans_refine(x, start)
        assert all(b <= c + 1e-9 for c, b in zip(a.objective, a.objective[1:]))
        assert np.bincount(a.labels, minlength=4)[1:].sum() == 600

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        x, _ = blobs(rng, [100, 100], sep=2.0)
        start = rng.integers(1, 3, size=200)
        a, b = kmeans_refine(x, start), kmeans_refine(x, start)
        assert np.array_equal(a.labels, b.labels) and np.array_equal(a.centroids, b.centroids)

    def test_gate_is_slack_times_percentile(self):
        x, labels = blobs(np.random.default_rng(8), [300, 300])
        a = kmeans_refine(x, labels, match_slack=2.0)
        d = np.linalg.norm(x[labels == 1] - a.centroids[0], axis=1)
        assert a.max_match_distance[0] == pytest.approx(2.0 * np.percentile(d, 99))

    def test_empty_cluster_reseeded(self):
        # the centroid of label 2 sits on top of label 1's blob, so cluster 2 empties
        x = np.vstack([np.zeros((20, 2)) + np.arange(20)[:, None] * 0.01, [[50.0, 50.0]], [[0.1, 0.1]]])
        labels = np.ones(22, dtype=int)
        labels[[20, 21]] = 2
        labels[0] = 3
        x[0] = [100.0, -100.0]
        a = kmeans_refine(x, labels)
        assert set(np.unique(a.labels)) == {1, 2, 3}

    def test_labels_must_cover_range(self):
        with pytest.raises(SchemaError):
            kmeans_refine(np.zeros((4, 2)), np.array([1, 1, 3, 3]))


@pytest.fixture(scope="module")
def bank():
    rng = np.random.default_rng(9)
    x, labels = blobs(rng, [300, 300, 300], m=4)
    x = x + rng.standard_normal((900, 4)) @ np.diag([0.1, 0.2, 0.3, 0.4])
    data = tagged(x, labels)
    params = fit_standardization(data)
    z = apply_standardization(data, params)
    part = derive_prior_conditions(data, z=z)
    a = kmeans_refine(z, part.labels)
    return fit_bank(data, a, GlobalConfig(), part.keys, params)


class TestBank:
    def test_structure(self, bank):
        assert bank.k == 3
        for sm in bank.submodels:
            sm.check_invariants()
        bank.validate()

    def test_match_centroid(self, bank):
        g = bank.global_standardization
        x = bank.submodels[1].centroid * g.sigma + g.mu
        assert match_condition(x, bank) == 2

    def test_tie_goes_to_lowest_id(self, bank):
        from dataclasses import replace

        cents = [np.array([1.0, 0, 0, 0]), np.array([0, 5.0, 0, 0]), np.array([-1.0, 0, 0, 0])]
        tied = replace(bank, submodels=[replace(sm, centroid=c, max_match_distance=np.inf)
                                        for sm, c in zip(bank.submodels, cents)])
        assert match_condition(bank.global_standardization.mu, tied) == 1

    def test_far_sample_unmatched(self, bank):
        g = bank.global_standardization
        assert match_condition(g.mu + 100 * g.sigma * np.array([1, -1, 1, -1]), bank) is None

    def test_wrong_length(self, bank):
        with pytest.raises(SchemaError):
            match_condition(np.zeros(3), bank)

    def test_permutation_stable(self, bank):
        rng = np.random.default_rng(10)
        x = bank.global_standardization.mu + rng.standard_normal((200, 4)) * 8
        ids, _ = bank.match_many(x)
        order = [2, 0, 1]
        permuted = ModelBank(
            config=bank.config,
            submodels=[bank.submodels[i] for i in order],
            global_standardization=bank.global_standardization,
            variable_names=bank.variable_names,
        )
        # renumbering is carried by condition_id, so the routing is unchanged
        ids_p, _ = permuted.match_many(x)
        assert np.array_equal(ids, ids_p)

    def test_refit_identical(self):
        rng = np.random.default_rng(11)
        x, labels = blobs(rng, [100, 100])
        data = tagged(x, labels)
        outs = []
        for _ in range(2):
            params = fit_standardization(data)
            z = apply_standardization(data, params)
            part = derive_prior_conditions(data, z=z)
            bank = fit_bank(data, kmeans_refine(z, part.labels), GlobalConfig(), part.keys, params)
            outs.append(bank.to_dict())
        assert outs[0] == outs[1]

    def test_insufficient_condition(self):
        rng = np.random.default_rng(12)
        x, labels = blobs(rng, [100, 4])
        data = tagged(x, labels)
        params = fit_standardization(data)
        z = apply_standardization(data, params)
        a = kmeans_refine(z, labels)
        with pytest.raises(InsufficientSamplesError, match="condition 2"):
            fit_bank(data, a, GlobalConfig(), [PriorKey(*KEYS[1]), PriorKey(*KEYS[2])], params)


def test_replica_has_three_conditions(replica_train):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert derive_prior_conditions(replica_train).k == 3
