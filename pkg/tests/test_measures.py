"""Transform evaluators checked against independent oracles."""

import json

import numpy as np
import pytest
from scipy.special import jv

from fourierdim import measures as M


def brute_force_cube_ft(z):
    # 1e6-point Riemann quadrature of int_0^1 exp(-2*pi*i*z*x) dx
    x = (np.arange(10**6) + 0.5) / 10**6
    return np.mean(np.exp(-2j * np.pi * z * x))


def sphere_bessel_oracle(k, rho):
    # closed radial form of the surface-measure transform, tests only
    return 2.0 * np.pi * rho ** (-(k - 1) / 2.0) * jv((k - 1) / 2.0, 2.0 * np.pi * rho)


def random_marginal(rng):
    """Random 1-D-ish marginal among the closed-under-product variants."""
    kind = rng.integers(0, 3)
    if kind == 0:
        n = int(rng.integers(1, 4))
        pts = np.sort(rng.random(n) * 2 - 1)
        while np.unique(pts).size < n:
            pts = np.sort(rng.random(n) * 2 - 1)
        w = rng.random(n) + 0.1
        return M.Atomic(pts[:, None], w)
    if kind == 1:
        return M.UniformCube(1)
    ratio = float(rng.uniform(0.2, 0.45))
    t2 = float(rng.uniform(ratio + 0.01, 1.0 - ratio))
    return M.SelfSimilar1D(ratio, [0.0, t2], [0.5, 0.5])


def test_dirac_transform_is_one():
    spec = M.Atomic([[0.0]], [1.0])
    for z in [0.0, 1.0, -17.5, 400.0]:
        fv = M.fourier_eval(spec, z)
        assert fv.value == pytest.approx(1.0, abs=1e-14)
        assert fv.abs_err == 0.0


def test_cube_halfpoint_against_grid_quadrature():
    oracle = brute_force_cube_ft(0.5)
    fv = M.fourier_eval(M.UniformCube(1), 0.5)
    assert abs(fv.value - oracle) < 5e-7
    assert abs(abs(fv.value) - 2.0 / np.pi) < 1e-12
    assert fv.abs_err == 0.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_sphere_quadrature_matches_bessel_form(k):
    rhos = np.array([0.25, 1.0, 3.5, 17.0, 130.0])
    vals, errs = M.sphere_transform_quad(k, rhos)
    oracle = sphere_bessel_oracle(k, rhos)
    assert np.all(np.abs(vals - oracle) < 1e-8 + errs)
    assert errs.max() <= M.SPHERE_QUAD_TOL


def test_sphere_batch_table_matches_direct_quadrature():
    spec = M.SphereSurface(1)
    rng = np.random.default_rng(3)
    Z = rng.normal(size=(64, 2)) * 20
    vals, errs = M.fourier_eval_batch(spec, Z)
    rho = np.linalg.norm(Z, axis=1)
    direct, _ = M.sphere_transform_quad(1, rho)
    assert np.abs(vals - direct).max() < 1e-7
    assert errs.max() < 1e-6


def test_selfsimilar_truncation_error_bound():
    spec = M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])
    z = np.array([1.0, 81.0, 6000.0])
    vals, errs = M.fourier_eval_batch(spec, z)
    assert errs.max() <= M.SELFSIMILAR_TAIL_TOL
    # doubling the depth moves the value by less than the quoted bound
    depth = M._ss_depth(spec.ratio, 2 / 3, 6000.0, M.SELFSIMILAR_TAIL_TOL)
    from fourierdim import _kernels

    deeper = _kernels.selfsimilar_ft(
        z, spec.ratio, spec.translations, spec.probabilities, depth + 25
    )
    assert np.abs(vals - deeper).max() <= M.SELFSIMILAR_TAIL_TOL


def test_cantor_transform_self_similarity():
    spec = M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])
    base = abs(M.fourier_eval(spec, 1.0).value)
    for n in range(1, 10):
        assert abs(M.fourier_eval(spec, float(3**n)).value) == pytest.approx(
            base, abs=1e-9
        )
    assert base > 0.3


def test_total_mass_values():
    assert M.total_mass(M.Atomic([[0.0], [1.0]], [0.3, 0.7])) == pytest.approx(1.0)
    assert M.total_mass(M.UniformCube(3)) == 1.0
    assert M.total_mass(M.SphereSurface(1)) == pytest.approx(2 * np.pi)
    assert M.total_mass(M.SphereSurface(2)) == pytest.approx(4 * np.pi)
    prod = M.Product(M.SphereSurface(1), M.UniformCube(2))
    assert M.total_mass(prod) == pytest.approx(2 * np.pi)
    # the transform at the origin is the mass, exactly
    for spec in [prod, M.UniformCube(2), M.Atomic([[1.0, 2.0]], [0.5])]:
        fv = M.fourier_eval(spec, np.zeros(spec.ambient_dim))
        assert fv.value == complex(M.total_mass(spec))
        assert fv.abs_err == 0.0


def test_product_transform_factorises_on_axis():
    mu = M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])
    nu = M.Atomic([[0.0], [0.5]], [1.0, 2.0])
    prod = M.Product(mu, nu)
    for x in [0.7, 2.0, -3.3]:
        lhs = M.fourier_eval(prod, [x, 0.0])
        rhs = M.fourier_eval(mu, x)
        assert abs(lhs.value - rhs.value * M.total_mass(nu)) < 1e-10


def test_product_factorisation_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(200):
        mu = random_marginal(rng)
        nu = random_marginal(rng)
        prod = M.Product(mu, nu)
        z = rng.normal(size=2) * 50
        pv = M.fourier_eval(prod, z)
        lv = M.fourier_eval(mu, z[0])
        rv = M.fourier_eval(nu, z[1])
        assert abs(pv.value - lv.value * rv.value) <= 1e-10


def test_conjugate_symmetry():
    rng = np.random.default_rng(5)
    specs = [
        M.UniformCube(2),
        M.SphereSurface(1),
        M.SelfSimilar1D(0.25, [0.0, 0.5], [0.4, 0.6]),
        M.Atomic([[0.1, -0.4], [0.8, 0.2]], [1.0, 0.5]),
        M.Product(M.UniformCube(1), M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])),
    ]
    for spec in specs:
        Z = rng.normal(size=(50, spec.ambient_dim)) * 30
        vp, _ = M.fourier_eval_batch(spec, Z)
        vn, _ = M.fourier_eval_batch(spec, -Z)
        assert np.abs(vn - np.conj(vp)).max() < 1e-12


def test_boundedness_by_total_mass():
    rng = np.random.default_rng(17)
    specs = [
        M.UniformCube(1),
        M.SphereSurface(2),
        M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5]),
        M.Atomic([[0.0], [0.3], [0.9]], [0.2, 0.5, 0.1]),
    ]
    for spec in specs:
        Z = rng.normal(size=(200, spec.ambient_dim)) * 100
        vals, errs = M.fourier_eval_batch(spec, Z)
        assert np.all(np.abs(vals) <= M.total_mass(spec) + errs + 1e-12)


def test_sampling_deterministic_and_unbiased():
    cube = M.UniformCube(2)
    a = M.sample(cube, 1000, seed=42)
    b = M.sample(cube, 1000, seed=42)
    assert np.array_equal(a, b)
    c = M.sample(cube, 1000, seed=43)
    assert not np.array_equal(a, c)

    big = M.sample(cube, 10**5, seed=1)
    se = 1.0 / np.sqrt(12 * 10**5)
    assert np.all(np.abs(big.mean(axis=0) - 0.5) < 3 * se)

    atom = M.sample(M.Atomic([[0.0]], [1.0]), 5, seed=0)
    assert np.array_equal(atom, np.zeros((5, 1)))


def test_sampling_matches_transform_monte_carlo():
    # empirical characteristic function vs the truncated product, 3 sigma
    spec = M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])
    n = 10**5
    xs = M.sample(spec, n, seed=123)[:, 0]
    emp = np.mean(np.exp(-2j * np.pi * 1.0 * xs))
    ref = M.fourier_eval(spec, 1.0).value
    assert abs(emp - ref) < 3.0 / np.sqrt(n)

    sph = M.SphereSurface(1)
    ys = M.sample(sph, n, seed=9)
    z = np.array([1.3, -0.4])
    emp = np.mean(np.exp(-2j * np.pi * ys @ z)) * M.total_mass(sph)
    ref = M.fourier_eval(sph, z).value
    assert abs(emp - ref) < 3.0 * M.total_mass(sph) / np.sqrt(n)


def test_sphere_sampling_on_unit_sphere():
    pts = M.sample(M.SphereSurface(2), 1000, seed=2)
    assert np.abs(np.linalg.norm(pts, axis=1) - 1.0).max() < 1e-12


def test_selfsimilar_samples_live_on_attractor():
    spec = M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])
    xs = M.sample(spec, 2000, seed=4)[:, 0]
    assert xs.min() >= 0.0 and xs.max() <= 1.0
    # middle third is empty for the Cantor attractor
    assert not np.any((xs > 1 / 3 + 1e-9) & (xs < 2 / 3 - 1e-9))


def test_json_round_trip_lossless():
    specs = [
        M.Atomic([[0.1, 0.2], [0.33333333333333331, 1.0]], [0.25, 0.75]),
        M.UniformCube(3),
        M.SphereSurface(2),
        M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5]),
        M.Product(M.SphereSurface(1), M.Product(M.UniformCube(1), M.UniformCube(2))),
    ]
    for spec in specs:
        text = M.measure_to_json(spec)
        back = M.measure_from_json(text)
        assert back == spec
        assert M.measure_to_json(back) == text


def test_json_file_io(tmp_path):
    spec = M.Product(M.SphereSurface(1), M.UniformCube(1))
    path = tmp_path / "cyl.json"
    M.save_measure(spec, path)
    assert M.load_measure(path) == spec
    doc = json.loads(path.read_text())
    assert doc["variant"] == "product"


def test_construction_invariants_enforced():
    with pytest.raises(M.SpecError):
        M.Atomic([[0.0], [0.0]], [1.0, 1.0])  # duplicate points
    with pytest.raises(M.SpecError):
        M.Atomic([[0.0]], [-1.0])  # nonpositive weight
    with pytest.raises(M.SpecError):
        M.SelfSimilar1D(0.5, [0.0, 0.2], [0.5, 0.5])  # OSC violated
    with pytest.raises(M.SpecError):
        M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.6])  # probs sum != 1
    with pytest.raises(M.SpecError):
        M.SelfSimilar1D(1 / 3, [0.0, 0.9], [0.5, 0.5])  # escapes [0,1]
    with pytest.raises(M.SpecError):
        M.UniformCube(0)
    with pytest.raises(M.SpecError):
        M.fourier_eval(M.UniformCube(2), [1.0])  # dimension mismatch
    with pytest.raises(M.SpecError):
        M.measure_from_json("{\"variant\": \"nope\"}")


def test_support_diameter():
    assert M.UniformCube(4).support_diameter == pytest.approx(2.0)
    assert M.SphereSurface(3).support_diameter == 2.0
    assert M.Atomic([[0.0], [0.75]], [1, 1]).support_diameter == pytest.approx(0.75)
    cantor = M.SelfSimilar1D(1 / 3, [0.0, 2 / 3], [0.5, 0.5])
    assert cantor.support_diameter == pytest.approx(1.0)
    prod = M.Product(M.UniformCube(1), M.UniformCube(1))
    assert prod.support_diameter == pytest.approx(np.sqrt(2.0))
