import numpy as np
import pytest
from scipy import integrate

from conftest import poisson_mean_bracket
from lossfluid import (
    ConstantIntensity,
    Deterministic,
    Exponential,
    LogNormal,
    ModelConfig,
    SinusoidalIntensity,
    martingale_residual,
    run_events,
    sample_arrivals,
    simulate,
)
from lossfluid.convolution import convolve_survival
from lossfluid.errors import DomainError, UnsupportedConfigError
from lossfluid.simulator import ADMITTED, BLOCKED, DEPARTURE, replication_streams


def single_server(T=4.0):
    return ModelConfig(ConstantIntensity(1.0), Deterministic(2.0), T, n=1)


class TestHandTraces:
    def test_one_job(self):
        path = run_events(single_server(), [1.0], [2.0])
        assert path.occupancy_at(0.5) == 0.0
        assert path.occupancy_at(1.0) == 1.0
        assert path.occupancy_at(2.999) == 1.0
        assert path.occupancy_at(3.0) == 0.0
        assert path.integrated(4.0) == pytest.approx(2.0)

    def test_blocked_while_busy(self):
        path = run_events(single_server(), [1.0, 1.5], [2.0, 2.0])
        assert list(path.kinds) == [ADMITTED, BLOCKED, DEPARTURE]
        assert path.blocked_fraction(2.0) == 1.0
        assert path.blocked_before(1.5) == 0.0
        assert path.occupancy_at(2.0) == 1.0

    def test_departure_before_simultaneous_arrival(self):
        path = run_events(single_server(), [1.0, 3.0], [2.0, 0.5])
        assert list(path.kinds) == [ADMITTED, DEPARTURE, ADMITTED, DEPARTURE]
        assert path.blocked_fraction(4.0) == 0.0

    def test_left_limits(self):
        path = run_events(single_server(), [1.0], [2.0])
        assert path.count_before(1.0) == 0
        assert path.count_before(3.0) == 1
        assert path.count_at(3.0) == 0

    def test_job_ids(self):
        cfg = ModelConfig(ConstantIntensity(1.0), Deterministic(2.0), 4.0, r0=0.5, n=2)
        path = run_events(cfg, [0.5, 0.7], [1.0, 1.0], initial=[3.0])
        assert path.n_initial == 1
        assert sorted(set(path.job_ids.tolist())) == [0, 1, 2]
        assert path.kinds[path.job_ids == 2][0] == BLOCKED

    def test_admission_intervals(self):
        path = run_events(single_server(), [1.0], [2.0])
        np.testing.assert_allclose(path.admission_intervals(), [[0.0, 1.0], [3.0, 4.0]])

    @pytest.mark.parametrize(
        "arrivals,marks",
        [([2.0, 1.0], [1.0, 1.0]), ([1.0], [1.0, 2.0]), ([5.0], [1.0])],
    )
    def test_rejects_bad_input(self, arrivals, marks):
        with pytest.raises(DomainError):
            run_events(single_server(), arrivals, marks)

    def test_outside_horizon_query(self):
        path = run_events(single_server(), [1.0], [2.0])
        with pytest.raises(DomainError):
            path.occupancy_at(4.5)


class TestArrivalSampling:
    def test_constant_count(self):
        rng = np.random.default_rng(0)
        counts = [sample_arrivals(ConstantIntensity(1.0), 100, 10.0, rng).size for _ in range(500)]
        lo, hi = poisson_mean_bracket(1000.0, 500)
        assert lo <= np.mean(counts) <= hi

    def test_sinusoid_count(self):
        spec = SinusoidalIntensity(2 / 3, 1.0, 10.0, horizon=20.0)
        rng = np.random.default_rng(1)
        counts = [sample_arrivals(spec, 200, 20.0, rng).size for _ in range(300)]
        lo, hi = poisson_mean_bracket(200 * spec.cumulative(20.0), 300)
        assert lo <= np.mean(counts) <= hi

    def test_sinusoid_shape(self):
        # arrivals in the high half-period outnumber the low half-period
        spec = SinusoidalIntensity(2 / 3, 1.0, 10.0, horizon=20.0)
        x = sample_arrivals(spec, 200, 20.0, np.random.default_rng(2))
        frac = np.mean((x % 10.0) < 5.0)
        expected = spec.cumulative(5.0) / spec.cumulative(10.0)
        assert abs(frac - expected) < 0.05

    def test_zero_rate(self):
        assert sample_arrivals(ConstantIntensity(0.0), 50, 5.0, np.random.default_rng(3)).size == 0

    def test_sorted(self):
        x = sample_arrivals(ConstantIntensity(3.0), 50, 5.0, np.random.default_rng(4))
        assert np.all(np.diff(x) >= 0)

    def test_streams_are_independent_per_purpose(self):
        a = [g.random() for g in replication_streams(5)]
        assert len(set(a)) == 3


class TestPathInvariants:
    @pytest.fixture(params=[20, 200])
    def path(self, request, sinusoid_model):
        return simulate(sinusoid_model.with_capacity(request.param), 11)

    def test_counts_bounded(self, path):
        assert np.all((path.counts >= 0) & (path.counts <= path.n))

    def test_blocking_only_when_full(self, path):
        before = np.concatenate(([path.n_initial], path.counts[:-1]))
        assert np.all(before[path.kinds == BLOCKED] == path.n)
        assert np.all(path.counts[path.kinds == BLOCKED] == path.n)

    def test_flow_balance(self, path):
        adm = np.cumsum(path.kinds == ADMITTED)
        dep = np.cumsum(path.kinds == DEPARTURE)
        assert np.array_equal(path.counts, path.n_initial + adm - dep)
        ev = path.event_counts(path.horizon)
        assert ev["arrivals"] == ev["admitted"] + ev["blocked"]

    def test_every_arrival_has_a_mark(self, path):
        assert path.service_times.shape == path.arrival_times.shape

    def test_integrated_by_midpoints(self, path):
        # midpoint rule on a grid containing every jump is exact for a step function
        grid = np.union1d(np.linspace(0, path.horizon, 20001), path.times)
        mids = 0.5 * (grid[1:] + grid[:-1])
        ref = np.sum(path.occupancy_at(mids) * np.diff(grid))
        assert path.integrated(path.horizon) == pytest.approx(ref, abs=1e-9)

    def test_integrated_by_trapezoid(self, path):
        # plain trapezoid on a 1e-3 mesh; each jump of size 1/n costs at most h/(2n)
        h = 1e-3
        mesh = np.linspace(0, path.horizon, int(round(path.horizon / h)) + 1)
        ref = integrate.trapezoid(path.occupancy_at(mesh), mesh)
        bound = path.times.size * h / (2 * path.n)
        assert abs(path.integrated(path.horizon) - ref) <= bound

    def test_deterministic_under_seed(self, sinusoid_model):
        a = simulate(sinusoid_model.with_capacity(50), 3)
        b = simulate(sinusoid_model.with_capacity(50), 3)
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.kinds, b.kinds)

    def test_seed_changes_path(self, sinusoid_model):
        a = simulate(sinusoid_model.with_capacity(50), 3)
        b = simulate(sinusoid_model.with_capacity(50), 4)
        assert not np.array_equal(a.arrival_times, b.arrival_times)


class TestScenarios:
    def test_initial_count(self):
        cfg = ModelConfig(ConstantIntensity(0.0), Exponential(1.0), 1.0, r0=0.35, n=10)
        assert simulate(cfg, 0).count_at(0.0) == 4

    def test_no_arrivals_means_no_blocking(self):
        cfg = ModelConfig(ConstantIntensity(0.0), Exponential(1.0), 3.0, r0=1.0, n=30)
        path = simulate(cfg, 0)
        assert path.blocked_fraction(3.0) == 0.0
        assert np.all(np.diff(path.counts) <= 0)

    def test_overload_blocking_near_two(self, overload):
        # Monte Carlo average of b^100(1); fluid value 2
        b = [simulate(overload.with_capacity(100), s).blocked_fraction(1.0) for s in range(20)]
        assert np.mean(b) == pytest.approx(2.0, abs=0.15)

    def test_requires_capacity(self, overload):
        with pytest.raises(DomainError):
            simulate(overload, 0)


class TestResidual:
    def test_empty_path_compensator(self):
        cfg = ModelConfig(ConstantIntensity(1.0), Exponential(1.0), 2.0, n=5)
        path = run_events(cfg, [], [])
        # no arrivals: X = -int_0^t e^{-(t-u)} du
        assert martingale_residual(path, cfg, 2.0) == pytest.approx(-(1 - np.exp(-2.0)), abs=1e-12)

    def test_compensator_against_dense_quadrature(self, sinusoid_model):
        cfg = sinusoid_model.with_capacity(20)
        path = simulate(cfg, 2)
        t = 9.0
        u = np.linspace(0, t, 400_001)
        open_ = path.count_before(u) < path.n
        f = open_ * cfg.service.survival(t - u) * cfg.intensity.rate(u)
        ref = integrate.trapezoid(f, u)
        comp = convolve_survival(cfg.intensity, cfg.service, t, path.admission_intervals())
        assert comp == pytest.approx(ref, abs=2e-4)

    def test_mean_near_zero(self, sinusoid_model):
        cfg = sinusoid_model.with_capacity(50)
        t = np.array([3.0, 12.0])
        x = np.array([martingale_residual(simulate(cfg, s), cfg, t) for s in range(100)])
        se = x.std(axis=0, ddof=1) / np.sqrt(len(x))
        assert np.all(np.abs(x.mean(axis=0)) < 4 * se)

    def test_requires_empty_start(self):
        cfg = ModelConfig(ConstantIntensity(1.0), Exponential(1.0), 2.0, r0=0.5, n=4)
        with pytest.raises(UnsupportedConfigError):
            martingale_residual(simulate(cfg, 0), cfg, 1.0)

    @pytest.mark.slow
    def test_second_moment_scales_like_one_over_n(self, sinusoid_model):
        from lossfluid.harness import residual_moment_check

        r20 = residual_moment_check(sinusoid_model, 20, 200, 1, points=20)
        r200 = residual_moment_check(sinusoid_model, 200, 200, 1, points=20)
        factor = r20.mean_sq.mean() / r200.mean_sq.mean()
        assert 5.0 <= factor <= 20.0
