"""Backend correctness and cross-backend equivalence for the numeric kernels."""

import math

import numpy as np
import pytest

from define_engine import _kernels


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    previous = _kernels.backend_name()
    _kernels.use_backend(request.param)
    yield request.param
    _kernels.use_backend(previous)


def naive_accumulate(winners, losers):
    k, m = winners.shape
    out = np.zeros((m, m))
    for t in range(k):
        for x in range(m):
            for y in range(m):
                if x != y:
                    out[x, y] += winners[t, x] * losers[t, y]
    return out


def naive_kl(target, row):
    return sum(t * math.log(t / q) for t, q in zip(target, row))


class TestAccumulate:
    def test_matches_naive_loops(self, backend, rng):
        winners = rng.uniform(0.01, 1.0, (7, 5))
        losers = rng.uniform(0.01, 1.0, (7, 5))
        out = _kernels.accumulate_outer(winners, losers)
        np.testing.assert_allclose(out, naive_accumulate(winners, losers), atol=1e-12)
        assert np.all(np.diagonal(out) == 0.0)

    def test_empty_pairs(self, backend):
        out = _kernels.accumulate_outer(np.zeros((0, 4)), np.zeros((0, 4)))
        assert out.shape == (4, 4)
        assert not out.any()


class TestKlRows:
    def test_matches_direct_sum(self, backend, rng):
        target = rng.uniform(0.05, 1.0, 6)
        target /= target.sum()
        corpus = rng.uniform(0.05, 1.0, (9, 6))
        corpus /= corpus.sum(axis=1, keepdims=True)
        out = _kernels.kl_rows(target, corpus)
        expected = [naive_kl(target, row) for row in corpus]
        np.testing.assert_allclose(out, expected, atol=1e-12)


class TestFitLoop:
    def test_two_item_closed_form(self, backend):
        w = np.array([[0.0, 2.0], [1.0, 0.0]])
        p, iterations, delta = _kernels.bt_fit_loop(w, np.array([0.5, 0.5]), 1e-10, 100)
        np.testing.assert_allclose(p, [2 / 3, 1 / 3], atol=1e-9)
        assert delta < 1e-10
        assert iterations <= 3

    def test_does_not_mutate_inputs(self, backend):
        w = np.array([[0.0, 2.0], [1.0, 0.0]])
        p0 = np.array([0.5, 0.5])
        _kernels.bt_fit_loop(w, p0, 1e-10, 100)
        np.testing.assert_array_equal(p0, [0.5, 0.5])

    def test_iteration_cap_respected(self, backend, rng):
        w = rng.uniform(0.1, 1.0, (4, 4))
        np.fill_diagonal(w, 0.0)
        p, iterations, delta = _kernels.bt_fit_loop(w, np.full(4, 0.25), 1e-30, 3)
        assert iterations == 3
        assert delta >= 1e-30


@pytest.mark.skipif(
    len(_kernels.available_backends()) < 2, reason="compiled backend not built"
)
class TestBackendEquivalence:
    def run_both(self, func, *args):
        previous = _kernels.backend_name()
        results = {}
        try:
            for name in _kernels.available_backends():
                _kernels.use_backend(name)
                results[name] = func(*args)
        finally:
            _kernels.use_backend(previous)
        return results

    def test_accumulate_agrees(self, rng):
        winners = rng.uniform(0.01, 1.0, (50, 12))
        losers = rng.uniform(0.01, 1.0, (50, 12))
        results = self.run_both(_kernels.accumulate_outer, winners, losers)
        np.testing.assert_allclose(results["c"], results["python"], atol=1e-12)

    def test_fit_agrees(self, rng):
        w = rng.uniform(0.1, 2.0, (8, 8))
        np.fill_diagonal(w, 0.0)
        p0 = np.full(8, 1 / 8)
        results = self.run_both(_kernels.bt_fit_loop, w, p0, 1e-12, 10000)
        np.testing.assert_allclose(results["c"][0], results["python"][0], atol=1e-12)

    def test_kl_agrees(self, rng):
        target = rng.uniform(0.05, 1.0, 33)
        target /= target.sum()
        corpus = rng.uniform(0.05, 1.0, (200, 33))
        corpus /= corpus.sum(axis=1, keepdims=True)
        results = self.run_both(_kernels.kl_rows, target, corpus)
        np.testing.assert_allclose(results["c"], results["python"], atol=1e-12)


class TestDispatch:
    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            _kernels.use_backend("fortran")

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            _kernels.kl_rows(np.ones(3), np.ones((2, 4)))
        with pytest.raises(ValueError):
            _kernels.accumulate_outer(np.ones((2, 3)), np.ones((3, 3)))
        with pytest.raises(ValueError):
            _kernels.bt_fit_loop(np.zeros((2, 2)), np.ones(2), 1e-8, 0)
