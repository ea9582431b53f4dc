import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracschrod.fields import (
    Field,
    Grid,
    boundary_mass_fraction,
    convolve,
    field_from_csv,
    field_to_csv,
    inner,
    load_field_binary,
    lp_norm,
    random_field,
    sample_gaussian,
    save_field_binary,
    spectral_l2_squared,
)

small_grids = st.sampled_from([Grid((1.0,), (16,)), Grid((7.5,), (64,)), Grid((2.0, 3.0), (8, 16)),
                               Grid((1.0, 1.0, 2.0), (8, 8, 8))])


def test_grid_geometry():
    g = Grid((4.0, 2.0), (8, 16))
    assert g.spacing == (0.5, 0.125)
    assert g.cell_volume == pytest.approx(0.0625)
    assert g.box_volume == pytest.approx(8.0)
    x = g.axes[0]
    assert x[0] == -2.0 and x[4] == 0.0
    k = np.sort(g.frequency_axes[1])
    np.testing.assert_allclose(k, 2 * np.pi * np.arange(-8, 8) / 2.0)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("q", [1, 2, 3.5, math.inf])
def test_constant_unit_box(d, q):
    g = Grid((1.0,) * d, (8,) * d)
    assert lp_norm(Field.constant(g, 1.0), q) == pytest.approx(1.0, rel=1e-14)


def test_half_indicator():
    g = Grid((1.0,), (64,))
    v = np.zeros(64)
    v[::2] = 2.0
    assert lp_norm(Field(g, v), 2) == pytest.approx(math.sqrt(2), rel=1e-14)


def test_gaussian_l2_against_quadrature():
    sq, _ = integrate.quad(lambda x: math.exp(-x * x), -20, 20, epsabs=0, epsrel=1e-12)
    g = Grid((40.0,), (1024,))
    f = g.sample(lambda x: np.exp(-x**2 / 2))
    assert abs(lp_norm(f, 2) - math.sqrt(sq)) < 1e-8
    assert abs(math.sqrt(sq) - math.pi**0.25) < 1e-12


def test_q_below_one_rejected(gauss1):
    with pytest.raises(ValueError):
        lp_norm(gauss1, 0.5)


def test_inner_basics():
    g = Grid((3.0,), (64,))
    x = g.axes[0]
    e1 = Field(g, np.exp(2j * np.pi * x / 3.0))
    e2 = Field(g, np.exp(4j * np.pi * x / 3.0))
    assert abs(inner(e1, e2)) <= 1e-12 * lp_norm(e1, 2) * lp_norm(e2, 2)
    assert inner(e1, e1) == pytest.approx(lp_norm(e1, 2) ** 2, rel=1e-14)
    assert inner(e1, Field.zeros(g)) == 0


def test_inner_grid_mismatch():
    with pytest.raises(ValueError):
        inner(Field.zeros(Grid((1.0,), (8,))), Field.zeros(Grid((2.0,), (8,))))


@given(small_grids, st.integers(0, 2**32 - 1))
def test_parseval(g, seed):
    f = random_field(g, seed)
    assert spectral_l2_squared(f) == pytest.approx(lp_norm(f, 2) ** 2, rel=1e-12)


@given(small_grids, st.integers(0, 2**32 - 1), st.floats(1.05, 20.0))
def test_holder(g, seed, q):
    a = Field(g, np.abs(random_field(g, seed).values))
    b = Field(g, np.abs(random_field(g, seed + 1).values))
    qp = q / (q - 1)
    assert lp_norm(a * b, 1) <= lp_norm(a, qp) * lp_norm(b, q) * (1 + 1e-12)


@given(small_grids, st.integers(0, 2**32 - 1), st.floats(1.0, 50.0) | st.just(math.inf),
       st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_absolute_homogeneity(g, seed, q, c):
    f = random_field(g, seed)
    assert lp_norm(c * f, q) == pytest.approx(abs(c) * lp_norm(f, q), rel=1e-13)


@given(small_grids, st.integers(0, 2**32 - 1))
def test_inner_conjugate_symmetry(g, seed):
    f, h = random_field(g, seed), random_field(g, seed + 7)
    a, b = inner(f, h), inner(h, f)
    assert abs(a - b.conjugate()) <= 1e-13 * max(1.0, abs(a))


def test_convolution_with_centred_kernel():
    g = Grid((8.0,), (128,))
    x = g.axes[0]
    f = Field(g, np.exp(-x**2))
    delta = np.zeros(128)
    delta[64] = 1.0 / g.cell_volume  # discrete unit mass at the origin
    np.testing.assert_allclose(convolve(f, Field(g, delta)).values, f.values, atol=1e-14)


def test_convolution_of_gaussians():
    # e^{-x^2/2} * e^{-x^2/2} = sqrt(pi) e^{-x^2/4}
    g = Grid((40.0,), (512,))
    x = g.axes[0]
    f = Field(g, np.exp(-x**2 / 2))
    np.testing.assert_allclose(convolve(f, f).values.real, math.sqrt(math.pi) * np.exp(-x**2 / 4), atol=1e-12)


def test_boundary_mass():
    g = Grid((10.0,), (256,))
    assert boundary_mass_fraction(sample_gaussian(g, width=0.5)) < 1e-20
    assert boundary_mass_fraction(Field.constant(g, 1.0)) == pytest.approx(2 * 16 / 256)


def test_csv_roundtrip():
    g = Grid((2.0, 1.0), (8, 4))
    f = random_field(g, 3)
    text = field_to_csv(f)
    assert text.splitlines()[0] == "i0,i1,re,im"
    assert np.array_equal(field_from_csv(text, g).values, f.values)


def test_binary_roundtrip(tmp_path):
    g = Grid((2.0,), (32,))
    f = random_field(g, 5)
    path, sidecar = save_field_binary(f, tmp_path / "u.c64")
    assert path.stat().st_size == 32 * 8
    assert '"complex64"' in sidecar.read_text()
    back = load_field_binary(path)
    assert back.grid == g
    np.testing.assert_allclose(back.values, f.values, rtol=1e-6)


def test_field_arithmetic_grid_check():
    with pytest.raises(ValueError):
        Field.zeros(Grid((1.0,), (8,))) + Field.zeros(Grid((1.0,), (16,)))


def test_random_field_seeded():
    g = Grid((1.0,), (64,))
    assert np.array_equal(random_field(g, 11).values, random_field(g, 11).values)
    assert not np.array_equal(random_field(g, 11).values, random_field(g, 12).values)
