import numpy as np
import pytest

from sl0.harness.instances import ProblemInstance, generate, plant, sphere_noise, stream


def test_k0_is_noise_only():
    inst = generate(5, 10, 0, 0.1, seed=2)
    assert not np.any(inst.s0)
    assert 0 < np.linalg.norm(inst.x) < 0.1


def test_noiseless_is_exact():
    inst = generate(5, 10, 2, 0.0, seed=2)
    assert np.linalg.norm(inst.A @ inst.s0 - inst.x) <= 1e-12
    assert np.count_nonzero(inst.s0) == 2


def test_json_is_byte_identical_and_roundtrips(tmp_path):
    a = generate(6, 12, 2, 1e-3, seed=9, trial=4).to_json()
    b = generate(6, 12, 2, 1e-3, seed=9, trial=4).to_json()
    assert a == b
    back = ProblemInstance.from_json(a)
    assert back.to_json() == a
    p = tmp_path / "i.json"
    back.save(p)
    assert ProblemInstance.load(p).to_json() == a


def test_trials_are_independent_streams():
    a = generate(6, 12, 2, 0.0, seed=9, trial=0)
    b = generate(6, 12, 2, 0.0, seed=9, trial=1)
    assert not np.array_equal(a.A, b.A) and not np.array_equal(a.s0, b.s0)
    c = generate(6, 12, 2, 0.0, seed=9, A=a.A, trial=1)
    np.testing.assert_array_equal(c.A, a.A)
    np.testing.assert_array_equal(c.s0, b.s0)
    assert c.generator_seed is None


def test_dictionary_maps_noise_radius():
    inst = generate(6, 12, 1, 1e-3, seed=1)
    d, x, eps_eff = inst.dictionary()
    assert np.linalg.norm(x - d.A @ inst.s0) < eps_eff


def test_plant_and_noise():
    rng = stream(0, 5)
    s = plant(rng, 20, 3)
    assert np.count_nonzero(s) == 3 and np.min(np.abs(s[s != 0])) >= 0.1
    v = sphere_noise(rng, 7, 0.5)
    assert np.linalg.norm(v) < 0.5
    with pytest.raises(ValueError):
        plant(rng, 3, 4)
