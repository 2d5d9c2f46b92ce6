import numpy as np
import pytest

from hyrrt import Box, FlowInputSignal, InputLibrary, build_flow_library, sample_flow_input, sample_jump_input
from hyrrt.gallery import biped_library, bouncing_ball_library
from hyrrt.library import flow_candidates, grid_levels


def test_flow_signal_is_constant_on_its_interval():
    sig = FlowInputSignal(0.1, [0.0])
    assert sig(0.05)[0] == 0.0
    with pytest.raises(ValueError):
        FlowInputSignal(0.0, [1.0])


def test_single_level_library():
    lib = build_flow_library([[0.0]], 0.1)
    (sig,) = lib.flow_signals
    assert sig.duration == 0.1 and np.array_equal(sig.value, [0.0])


def test_library_cardinalities():
    assert len(build_flow_library([[-1.0], [0.0], [1.0]], 0.2).flow_signals) == 3
    lib = biped_library()
    assert len(lib.flow_signals) == 125
    assert all(s.duration == 0.2 for s in lib.flow_signals)
    assert lib.jump_values.tolist() == [[0.0, 0.0, 0.0]]


def test_grid_levels_order():
    lv = grid_levels([[0, 1], [5, 6]])
    assert [v.tolist() for v in lv] == [[0, 5], [0, 6], [1, 5], [1, 6]]


def test_library_argument_checks():
    with pytest.raises(ValueError):
        build_flow_library([], 0.1)
    with pytest.raises(ValueError):
        build_flow_library([[0.0]], 0.0)
    with pytest.raises(ValueError):
        InputLibrary(flow_box=Box([0], [1]))
    with pytest.raises(ValueError):
        sample_flow_input(InputLibrary(jump_values=[[0.0]]), np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_jump_input(build_flow_library([[0.0]], 0.1), np.random.default_rng(0))


def test_single_signal_always_returned():
    lib = build_flow_library([[0.0]], 0.1)
    rng = np.random.default_rng(0)
    first = lib.flow_signals[0]
    assert all(sample_flow_input(lib, rng) is first for _ in range(100))


def test_finite_flow_sampling_is_uniform():
    lib = build_flow_library([[v] for v in range(5)], 0.1)
    rng = np.random.default_rng(11)
    N, k = 100_000, 5
    draws = [int(sample_flow_input(lib, rng).value[0]) for _ in range(N)]
    counts = np.bincount(draws, minlength=k)
    p = 1 / k
    sigma = np.sqrt(N * p * (1 - p))
    assert np.all(np.abs(counts - N * p) < 5 * sigma)
    # chi-square with 4 dof: 99.9% quantile is 18.47
    chi2 = np.sum((counts - N * p) ** 2 / (N * p))
    assert chi2 < 18.47


def test_continuous_durations_have_uniform_mean():
    lib = InputLibrary(T_m=1.0, flow_box=Box([-1], [1]))
    rng = np.random.default_rng(12)
    sigs = [sample_flow_input(lib, rng) for _ in range(100_000)]
    durations = np.array([s.duration for s in sigs])
    assert abs(durations.mean() - 0.5) < 0.01
    assert durations.min() > 0 and durations.max() <= 1.0
    levels = np.array([s.value[0] for s in sigs])
    assert levels.min() >= -1 and levels.max() <= 1


def test_jump_values_from_list():
    lib = bouncing_ball_library()
    rng = np.random.default_rng(13)
    vals = {float(sample_jump_input(lib, rng)[0]) for _ in range(1000)}
    assert vals == {0.0, 1.0, 2.0, 3.0, 4.0}


def test_singleton_jump_value_is_constant():
    lib = biped_library()
    rng = np.random.default_rng(14)
    assert all(np.array_equal(sample_jump_input(lib, rng), np.zeros(3)) for _ in range(50))


def test_jump_box_support():
    lib = InputLibrary(jump_box=Box([0], [5]))
    rng = np.random.default_rng(15)
    vals = np.array([sample_jump_input(lib, rng)[0] for _ in range(100_000)])
    assert vals.max() < 5 and vals.min() >= 0


def test_sampling_is_deterministic_per_seed():
    lib = InputLibrary(T_m=0.5, flow_box=Box([-2, -2], [2, 2]))
    a = [sample_flow_input(lib, np.random.default_rng(3)) for _ in range(1)]
    b = [sample_flow_input(lib, np.random.default_rng(3)) for _ in range(1)]
    assert a[0].duration == b[0].duration and np.array_equal(a[0].value, b[0].value)


def test_candidates_enumerate_finite_library_or_draw():
    rng = np.random.default_rng(0)
    assert len(flow_candidates(biped_library(), rng)) == 125
    cont = InputLibrary(T_m=0.5, flow_box=Box([-1], [1]))
    assert len(flow_candidates(cont, rng, draws=32)) == 32
