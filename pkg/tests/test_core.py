import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stringkex.core import (
    AffineMap,
    ParamError,
    RingParams,
    affine_apply,
    affine_of_string,
    fixed_point_spectrum,
    gw_step,
    mod_inverse,
    t_fold,
)

from oracles import all_strings, expanded_fold, inverse_table_256

P256 = RingParams(256, 2)
P8 = RingParams(8, 2)

symbols = st.integers(0, 255)


@pytest.mark.parametrize("p,w", [(7, 2), (2, 2), (0, 2), (256, 1), (256, 3), (256, 0)])
def test_ring_params_rejects_odd_or_small(p, w):
    with pytest.raises(ParamError):
        RingParams(p, w)


def test_ring_params_defaults():
    assert RingParams() == RingParams(256, 2)
    assert RingParams(4, 2).p == 4


@pytest.mark.parametrize(
    "xi,alpha,expected",
    [(0, 0, 0), (5, 0, 5), (200, 100, 108)],
)
def test_gw_step_examples(xi, alpha, expected):
    assert gw_step(P256, xi, alpha) == expected


def test_gw_step_no_overflow_at_large_w():
    params = RingParams(256, 1 << 40)
    assert gw_step(params, 255, 255) == ((params.w * 255 + 1) * 255 + 255) % 256


def test_t_fold_examples():
    assert t_fold(P256, 9, []) == 9
    assert t_fold(P256, 3, [2]) == 17
    assert t_fold(P256, 3, [2, 7]) == 6
    assert t_fold(P256, 3, [7, 2]) == 6


def test_affine_examples():
    assert affine_of_string(P256, []) == AffineMap(1)
    amap = affine_of_string(P256, [2, 7])
    assert amap.bigP == 75
    assert affine_apply(P256, amap, 3) == 6
    assert affine_apply(P256, AffineMap(1), 42) == 42
    assert affine_apply(P8, AffineMap(3), 3) == 2 == gw_step(P8, 3, 1)


@pytest.mark.parametrize("bad", [0, 2, 74, 512, -1])
def test_affine_apply_rejects_corrupted_map(bad):
    with pytest.raises(ParamError):
        affine_apply(P256, AffineMap(bad), 3)


@pytest.mark.parametrize("w", [2, 4])
def test_affine_collapse_exhaustive_small(w):
    params = RingParams(8, w)
    for s in all_strings(8, 4):
        amap = affine_of_string(params, s)
        assert amap.bigP % w == 1 and amap.bigP % 2 == 1
        for xi in range(8):
            assert t_fold(params, xi, s) == affine_apply(params, amap, xi)


def test_t_fold_matches_expanded_product_sum():
    rng = random.Random(5)
    for _ in range(200):
        p = rng.choice([8, 12, 256, 1000])
        w = rng.choice([2, 4, 10])
        s = [rng.randrange(p) for _ in range(rng.randint(0, 12))]
        xi = rng.randrange(p)
        assert t_fold(RingParams(p, w), xi, s) == expanded_fold(p, w, xi, s)


@given(st.integers(0, 255), st.lists(symbols, max_size=40), st.randoms())
def test_t_fold_permutation_invariant(xi, s, rnd):
    shuffled = list(s)
    rnd.shuffle(shuffled)
    assert t_fold(P256, xi, s) == t_fold(P256, xi, shuffled)


@given(st.integers(0, 255), st.lists(symbols, max_size=600))
def test_affine_collapse_random_p256(xi, s):
    assert t_fold(P256, xi, s) == affine_apply(P256, affine_of_string(P256, s), xi)


def test_quasi_commutative_exhaustive_p8():
    for w in (2, 4, 6):
        params = RingParams(8, w)
        for xi in range(8):
            for a in range(8):
                for b in range(8):
                    assert gw_step(params, gw_step(params, xi, a), b) == gw_step(
                        params, gw_step(params, xi, b), a
                    )


def test_identity_symbol_zero():
    for xi in range(256):
        assert gw_step(P256, xi, 0) == xi


def test_mod_inverse_examples():
    assert mod_inverse(1, 256) == 1
    assert mod_inverse(1, 97) == 1
    assert mod_inverse(3, 256) == 171
    assert mod_inverse(2, 256) is None
    assert mod_inverse(0, 256) is None
    with pytest.raises(ValueError):
        mod_inverse(1, 1)


def test_mod_inverse_matches_table_oracle():
    table = inverse_table_256()
    for x in range(256):
        inv = mod_inverse(x, 256)
        if x % 2:
            assert inv == table[x]
            assert x * inv % 256 == 1
        else:
            assert inv is None


@given(st.integers(2, 10_000), st.integers(0, 10_000))
def test_mod_inverse_property(m, x):
    x %= m
    inv = mod_inverse(x, m)
    if np.gcd(x, m) == 1:
        assert inv is not None and 0 <= inv < m and x * inv % m == 1
    else:
        assert inv is None


@pytest.mark.parametrize("p", [8, 256])
@pytest.mark.parametrize("w", [2, 4, 6])
def test_no_fixed_points_even_w(p, w):
    assert fixed_point_spectrum(p, w) == []


def _scan_numpy(p, w):
    xi = np.arange(p, dtype=np.int64)[:, None]
    a = np.arange(p, dtype=np.int64)[None, :]
    hit = ((w * a + 1) * xi + a) % p == xi
    hit[:, 0] = False
    return hit


@pytest.mark.parametrize("p", [8, 256])
@pytest.mark.parametrize("w", [1, 2, 3, 5])
def test_fixed_point_spectrum_matches_characterization(p, w):
    hit = _scan_numpy(p, w)
    expected = [
        (xi, tuple(a for a in range(1, p) if a * (w * xi + 1) % p == 0)) for xi in range(p)
    ]
    expected = [e for e in expected if e[1]]
    assert fixed_point_spectrum(p, w) == expected
    assert sum(len(a) for _, a in expected) == int(hit.sum())


def test_fixed_points_odd_w_examples():
    spec1 = dict(fixed_point_spectrum(256, 1))
    assert spec1[255] == tuple(range(1, 256))
    spec3 = dict(fixed_point_spectrum(256, 3))
    assert spec3[85] == tuple(range(1, 256))
    # p - 3 is not a universal fixed point for w = 3
    assert spec3.get(253, ()) != tuple(range(1, 256))


def test_fixed_point_spectrum_refuses_large_or_bad():
    with pytest.raises(ParamError):
        fixed_point_spectrum(1 << 17, 2)
    with pytest.raises(ParamError):
        fixed_point_spectrum(9, 2)
    with pytest.raises(ParamError):
        fixed_point_spectrum(8, 0)
