import json

import numpy as np
import pytest
import torch

from matk import rng
from matk.datasets import epoch_permutation


def test_reseed_reproduces_draws():
    rng.seed_everything(42)
    a = rng.stream("x").random(5)
    rng.seed_everything(42)
    b = rng.stream("x").random(5)
    assert np.array_equal(a, b)


def test_different_seeds_shuffle_differently():
    rng.seed_everything(1)
    p1 = epoch_permutation(100)
    rng.seed_everything(2)
    p2 = epoch_permutation(100)
    assert not np.array_equal(p1, p2)
    assert sorted(p1) == list(range(100))


def test_streams_are_independent():
    rng.seed_everything(5)
    init_only = rng.stream("init").random(4)
    rng.seed_everything(5)
    rng.stream("shuffle").random(1000)
    assert np.array_equal(rng.stream("init").random(4), init_only)


def test_derive_is_pure():
    rng.seed_everything(3)
    a = rng.derive("lime", "m1").random(3)
    rng.stream("lime").random(10)
    assert np.array_equal(rng.derive("lime", "m1").random(3), a)
    assert not np.array_equal(rng.derive("lime", "m2").random(3), a)
    assert np.array_equal(rng.derive("lime", "m1", seed=3).random(3), a)


def test_seed_also_seeds_torch():
    rng.seed_everything(9)
    a = torch.rand(3)
    rng.seed_everything(9)
    assert torch.equal(torch.rand(3), a)


def test_state_roundtrip_is_json():
    rng.seed_everything(11)
    rng.stream("s").random(7)
    state = json.loads(json.dumps(rng.get_state()))
    expected = rng.stream("s").random(3)
    rng.seed_everything(0)
    rng.set_state(state)
    assert rng.current_seed() == 11
    assert np.array_equal(rng.stream("s").random(3), expected)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        rng.seed_everything(-1)
