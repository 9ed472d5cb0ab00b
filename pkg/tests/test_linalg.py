import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
import scipy.sparse as sp

from pipg import linalg as la
from pipg.errors import FormatError
from pipg.ocp import build_masses, build_quadrotor, stack_ocp

from _oracles import masses_zoh, quadrotor_zoh


def random_block_operator(seed):
    """Random placed blocks plus an independent numpy densification."""
    rng = np.random.default_rng([5, seed])
    rows, cols = int(rng.integers(3, 30)), int(rng.integers(3, 30))
    dense = np.zeros((rows, cols))
    blocks = []
    for _ in range(int(rng.integers(1, 8))):
        scale = float(rng.choice([1.0, -1.0, rng.uniform(-3, 3)]))
        if rng.uniform() < 0.3:
            d = int(rng.integers(1, min(rows, cols) + 1))
            r, c = int(rng.integers(0, rows - d + 1)), int(rng.integers(0, cols - d + 1))
            blocks.append(la.Block(r, c, la.Identity(d), scale))
            dense[r:r + d, c:c + d] += scale * np.eye(d)
        else:
            h, w = int(rng.integers(1, rows + 1)), int(rng.integers(1, cols + 1))
            r, c = int(rng.integers(0, rows - h + 1)), int(rng.integers(0, cols - w + 1))
            data = rng.standard_normal((h, w))
            blocks.append(la.Block(r, c, data, scale))
            dense[r:r + h, c:c + w] += scale * data
    return la.BlockOperator(rows, cols, blocks), dense


def test_identity_and_scalar_examples():
    op = la.BlockOperator(3, 3, [la.Block(0, 0, la.Identity(3))])
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(la.apply(op, x), x)
    assert la.apply(np.array([[2.0]]), np.array([3.0])).tolist() == [6.0]
    assert la.apply(la.BlockOperator.from_dense([[2.0]]), np.array([3.0])).tolist() == [6.0]


@pytest.mark.parametrize("seed", range(20))
def test_block_operator_matches_dense_oracle(seed):
    op, dense = random_block_operator(seed)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.cols)
    y = rng.standard_normal(op.rows)
    np.testing.assert_allclose(op.apply(x), dense @ x, rtol=0, atol=1e-12)
    np.testing.assert_allclose(op.apply_transpose(y), dense.T @ y, rtol=0, atol=1e-12)
    X = rng.standard_normal((op.cols, 7))
    np.testing.assert_allclose(op.apply(X), dense @ X, rtol=0, atol=1e-12)
    np.testing.assert_allclose(op.to_dense(), dense, rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_adjoint_identity(seed):
    op, _ = random_block_operator(seed)
    rng = np.random.default_rng([9, seed])
    for _ in range(10):
        x = rng.standard_normal(op.cols)
        y = rng.standard_normal(op.rows)
        assert abs(op.apply(x) @ y - x @ op.apply_transpose(y)) <= 1e-12 * max(
            1.0, np.linalg.norm(x) * np.linalg.norm(y))


def test_adjoint_identity_on_stacked_benchmarks():
    rng = np.random.default_rng(3)
    for spec in (build_masses(), build_quadrotor()):
        H = stack_ocp(spec).H
        x = rng.standard_normal(H.cols)
        y = rng.standard_normal(H.rows)
        assert abs(H.apply(x) @ y - x @ H.apply_transpose(y)) <= 1e-12 * np.linalg.norm(x) * np.linalg.norm(y)


def test_block_placement_rejected_outside_shape():
    with pytest.raises(ValueError, match="exceeds"):
        la.BlockOperator(2, 2, [la.Block(1, 1, np.ones((2, 2)))])


def test_dimension_mismatch_rejected():
    op = la.BlockOperator.from_dense(np.ones((2, 3)))
    with pytest.raises(ValueError):
        op.apply(np.ones(2))
    with pytest.raises(ValueError):
        op.apply_transpose(np.ones(3))
    with pytest.raises(ValueError):
        la.apply(np.ones((2, 3)), np.ones(4))


@pytest.mark.parametrize("seed", range(5))
def test_csr_matmul_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    a = sp.random(40, 30, density=0.2, random_state=seed, format="csr")
    for x in (rng.standard_normal(30), rng.standard_normal((30, 9)),
              np.asfortranarray(rng.standard_normal((30, 4))), rng.standard_normal((30, 9))[:, ::2]):
        np.testing.assert_allclose(la.csr_matmul(a, x), a @ x, rtol=0, atol=1e-13)


def test_block_operator_serialization_round_trip():
    op, _ = random_block_operator(4)
    back = la.BlockOperator.from_dict(op.to_dict())
    assert back.to_dict() == op.to_dict()
    np.testing.assert_array_equal(back.to_dense(), op.to_dense())


@pytest.mark.parametrize("record, where", [
    ({"rows": 2, "cols": 2}, "$"),
    ({"rows": 2, "cols": 2, "blocks": [{"row": 0, "col": 0}]}, "$.blocks[0]"),
    ({"rows": 2, "cols": 2, "blocks": [{"row": 0, "col": 0, "kind": "weird"}]}, "$.blocks[0].kind"),
    ({"rows": 2, "cols": 2, "blocks": [{"row": 0, "col": 0, "kind": "dense", "data": [1, 2]}]},
     "$.blocks[0].data"),
    ({"rows": 1, "cols": 1, "blocks": [{"row": 0, "col": 0, "kind": "identity", "dim": 2}]}, "$"),
])
def test_block_operator_format_errors(record, where):
    with pytest.raises(FormatError) as err:
        la.BlockOperator.from_dict(record)
    assert err.value.path == where


# -- spectral norm ---------------------------------------------------------------

def test_spectral_norm_identity():
    s = la.spectral_norm_sq(np.eye(5))
    assert 1.0 <= s <= 1.001


def test_spectral_norm_diagonal():
    s = la.spectral_norm_sq(np.diag([3.0, 1.0]))
    assert 9.0 <= s <= 9.009


def test_spectral_norm_zero_operator():
    assert la.spectral_norm_sq(np.zeros((3, 4))) == 0.0


def test_spectral_norm_rejects_zero_iterations():
    with pytest.raises(ValueError):
        la.spectral_norm_sq(np.eye(2), iters=0)


def test_spectral_norm_deterministic():
    op, _ = random_block_operator(1)
    assert la.spectral_norm_sq(op, seed=3) == la.spectral_norm_sq(op, seed=3)


@pytest.mark.parametrize("seed", range(15))
def test_spectral_norm_bounds_true_norm(seed):
    op, dense = random_block_operator(seed)
    true = np.linalg.svd(dense, compute_uv=False)[0] ** 2
    est = la.spectral_norm_sq(op, iters=2000)
    assert est >= true
    assert est <= true * (1 + la.SIGMA_INFLATION) * (1 + 1e-9)


@pytest.mark.parametrize("build", [build_masses, build_quadrotor])
def test_problem_sigma_matches_svd(build):
    prob = stack_ocp(build())
    true = np.linalg.svd(prob.H.to_dense(), compute_uv=False)[0] ** 2
    assert true <= prob.sigma <= true * (1 + la.SIGMA_INFLATION) * (1 + 1e-9)


# -- curvature ---------------------------------------------------------------------

def test_curvature_identity_and_zero():
    assert la.curvature_bounds(np.eye(4)) == (1.0, 1.0)
    assert la.curvature_bounds(np.zeros((3, 3))) == (0.0, 0.0)


def test_curvature_quadrotor_weights():
    mu, lam = la.curvature_bounds(stack_ocp(build_quadrotor()).P)
    assert mu == pytest.approx(0.5, abs=1e-14)
    assert lam == pytest.approx(2.5, abs=1e-14)


def test_curvature_clamps_tiny_eigenvalues():
    assert la.curvature_bounds(np.diag([1e-13, 2.0]))[0] == 0.0


def test_curvature_rejects_asymmetric_and_indefinite():
    with pytest.raises(ValueError, match="symmetric"):
        la.curvature_bounds(np.array([[1.0, 1e-9], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="indefinite"):
        la.curvature_bounds(np.diag([1.0, -1e-6]))
    la.curvature_bounds(np.diag([1.0, -1e-9]))


# -- matrix exponential and discretization ----------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_expm_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    m = rng.standard_normal((n, n)) * rng.choice([0.1, 1.0, 5.0])
    ref = scipy.linalg.expm(m)
    np.testing.assert_allclose(la.expm(m), ref, rtol=1e-11, atol=1e-12 * np.max(np.abs(ref)))


def test_zoh_trivial_dynamics():
    A, B, h = la.zoh_discretize(np.zeros((2, 2)), np.eye(2), np.zeros(2), 0.25)
    np.testing.assert_array_equal(A, np.eye(2))
    np.testing.assert_allclose(B, 0.25 * np.eye(2), atol=1e-16)
    np.testing.assert_array_equal(h, np.zeros(2))


@pytest.mark.parametrize("dt", [0.1, 0.25, 1.0, 3.0])
def test_zoh_double_integrator_closed_form(dt):
    a_c = np.array([[0.0, 1.0], [0.0, 0.0]])
    b_c = np.array([[0.3], [1.7]])
    h_c = np.array([0.2, -0.5])
    A, B, h = la.zoh_discretize(a_c, b_c, h_c, dt)
    integral = np.array([[dt, dt * dt / 2], [0.0, dt]])
    np.testing.assert_allclose(A, [[1.0, dt], [0.0, 1.0]], rtol=0, atol=1e-12)
    np.testing.assert_allclose(B, integral @ b_c, rtol=0, atol=1e-12)
    np.testing.assert_allclose(h, integral @ h_c, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_zoh_semigroup(seed):
    rng = np.random.default_rng([11, seed])
    n = int(rng.integers(2, 7))
    m = rng.standard_normal((n, n))
    a_c = m - (np.max(np.real(np.linalg.eigvals(m))) + 0.5) * np.eye(n)
    b_c = rng.standard_normal((n, 2))
    h_c = rng.standard_normal(n)
    dt = float(rng.uniform(0.05, 0.5))
    A1, B1, h1 = la.zoh_discretize(a_c, b_c, h_c, dt)
    A2, B2, h2 = la.zoh_discretize(a_c, b_c, h_c, 2 * dt)
    np.testing.assert_allclose(A2, A1 @ A1, rtol=0, atol=1e-10)
    # two held steps equal one step of twice the length
    np.testing.assert_allclose(B2, A1 @ B1 + B1, rtol=0, atol=1e-10)
    np.testing.assert_allclose(h2, A1 @ h1 + h1, rtol=0, atol=1e-10)


def test_zoh_rejects_bad_inputs():
    with pytest.raises(ValueError):
        la.zoh_discretize(np.eye(2), np.eye(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        la.zoh_discretize(np.ones((2, 3)), np.eye(2), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        la.zoh_discretize(np.eye(2), np.eye(2), np.zeros(3), 1.0)


def test_zoh_matches_quadrature():
    a_c = np.array([[0.0, 1.0], [-2.0, -0.3]])
    b_c = np.array([[0.0], [1.0]])
    dt = 0.4
    _, B, _ = la.zoh_discretize(a_c, b_c, np.zeros(2), dt)
    s = np.linspace(0.0, dt, 2001)
    vals = np.stack([scipy.linalg.expm(a_c * t) @ b_c for t in s])
    np.testing.assert_allclose(B, scipy.integrate.trapezoid(vals, s, axis=0), atol=1e-7)


def test_zoh_quadrotor_closed_form():
    spec = build_quadrotor()
    A, B, h = quadrotor_zoh()
    np.testing.assert_allclose(spec.A, A, rtol=0, atol=1e-12)
    np.testing.assert_allclose(spec.B, B, rtol=0, atol=1e-12)
    np.testing.assert_allclose(spec.h, h, rtol=0, atol=1e-12)
    assert spec.h[2] == pytest.approx(-0.30625, abs=1e-12)
    assert spec.h[5] == pytest.approx(-2.45, abs=1e-12)


@pytest.mark.parametrize("N", [1, 2, 4])
def test_zoh_masses_closed_form(N):
    spec = build_masses(N=N)
    A, B, h = masses_zoh(N)
    np.testing.assert_allclose(spec.A, A, rtol=0, atol=1e-12)
    np.testing.assert_allclose(spec.B, B, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(spec.h, h)
