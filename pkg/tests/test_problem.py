import json
import math

import numpy as np
import pytest

from pipg import geometry as geo
from pipg.bench import compute_reference, toy_problem
from pipg.errors import FormatError
from pipg.linalg import to_dense
from pipg.ocp import build_masses, stack_ocp
from pipg.problem import (
    ConicProblem,
    KKTResiduals,
    SaddleReference,
    bregman,
    error_metrics,
    gradient,
    kkt_certificate,
    lagrangian,
    load_problem,
    objective,
    problem_from_dict,
    problem_to_dict,
    save_problem,
)

from _instances import random_qp


def plain_qp(P, p):
    n = len(p)
    return ConicProblem(np.asarray(P, float), np.asarray(p, float), np.zeros((1, n)), np.zeros(1),
                        geo.Zero(1), geo.Reals(n))


# -- objective and gradient --------------------------------------------------------

def test_objective_and_gradient_examples():
    prob = plain_qp(np.eye(2), [0.0, 0.0])
    assert objective(prob, [3.0, 4.0]) == 12.5
    np.testing.assert_array_equal(gradient(prob, [3.0, 4.0]), [3.0, 4.0])
    prob = plain_qp(np.eye(2), [1.0, -2.0])
    assert objective(prob, np.zeros(2)) == 0.0
    np.testing.assert_array_equal(gradient(prob, np.zeros(2)), [1.0, -2.0])


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    prob = random_qp(seed, True)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(prob.n)
    eps = 1e-5
    fd = np.array([(objective(prob, z + eps * e) - objective(prob, z - eps * e)) / (2 * eps)
                   for e in np.eye(prob.n)])
    g = gradient(prob, z)
    assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g)


def test_batched_evaluations_match_columns():
    prob = random_qp(2, False)
    z = np.random.default_rng(0).standard_normal((prob.n, 5))
    f = objective(prob, z)
    g = gradient(prob, z)
    for c in range(5):
        assert f[c] == pytest.approx(objective(prob, z[:, c]), rel=1e-14)
        np.testing.assert_allclose(g[:, c], gradient(prob, z[:, c]), rtol=1e-14, atol=1e-14)


# -- Bregman divergence ---------------------------------------------------------

def test_bregman_examples():
    prob = random_qp(0, True)
    z = np.random.default_rng(1).standard_normal(prob.n)
    assert bregman(prob, z, z) == pytest.approx(0.0, abs=1e-12)
    ident = plain_qp(np.eye(3), [0.5, 0.0, -1.0])
    a, b = np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.0, 0.5])
    assert bregman(ident, a, b) == pytest.approx(0.5 * np.sum((a - b) ** 2), rel=1e-14)


@pytest.mark.parametrize("seed,sc", [(0, True), (1, True), (2, False), (3, False)])
def test_bregman_sandwich(seed, sc):
    prob = random_qp(seed, sc)
    rng = np.random.default_rng([2, seed])
    z = rng.standard_normal((prob.n, 1000)) * rng.choice([0.01, 1.0, 10.0], size=1000)
    zp = rng.standard_normal((prob.n, 1000))
    b = bregman(prob, z, zp)
    d2 = np.sum((z - zp) ** 2, axis=0)
    slack = 1e-10 * (1 + d2)
    assert np.all(0.5 * prob.mu * d2 - slack <= b)
    assert np.all(b <= 0.5 * prob.lam * d2 + slack)


def test_cached_constants():
    prob = random_qp(4, True)
    ev = np.linalg.eigvalsh(to_dense(prob.P))
    assert prob.mu == pytest.approx(ev[0], rel=1e-10)
    assert prob.lam == pytest.approx(ev[-1], rel=1e-10)
    assert prob.sigma >= np.linalg.norm(to_dense(prob.H), 2) ** 2
    assert prob.K.is_cone


# -- Lagrangian ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_lagrangian_identity(seed):
    prob = random_qp(seed, seed % 2 == 0)
    rng = np.random.default_rng([3, seed])
    z = rng.standard_normal(prob.n)
    w = rng.standard_normal(prob.m)
    H = to_dense(prob.H)
    inner = (H @ z - prob.g) @ w
    assert abs(lagrangian(prob, z, w) - lagrangian(prob, z, np.zeros(prob.m)) - inner) <= 1e-12 * max(1, abs(inner))
    assert lagrangian(prob, z, np.zeros(prob.m)) == objective(prob, z)


def test_lagrangian_on_equality_feasible_point():
    H = np.array([[1.0, 1.0]])
    prob = ConicProblem(np.eye(2), np.zeros(2), H, np.array([1.0]), geo.Zero(1), geo.Reals(2))
    z = np.array([0.3, 0.7])
    for w in (-5.0, 0.0, 2.0):
        assert lagrangian(prob, z, [w]) == pytest.approx(objective(prob, z), abs=1e-15)


# -- error metrics -----------------------------------------------------------------

def _ref(z, w):
    return SaddleReference(np.asarray(z, float), np.asarray(w, float), KKTResiduals(0, 0, 0, 0))


def test_error_metrics_examples():
    prob = toy_problem()
    ref = _ref([1.0], [-1.0])
    assert error_metrics(prob, [1.0], ref) == (0.0, 0.0)
    opt, fea = error_metrics(prob, [3.0], ref)
    assert (opt, fea) == (4.0, 0.0)
    opt, fea = error_metrics(prob, [0.0], ref)
    assert opt == 1.0 and fea == pytest.approx(0.5)


def test_error_metrics_match_direct_recomputation():
    prob = random_qp(1, True)
    rng = np.random.default_rng(8)
    zs = rng.standard_normal(prob.n)
    ref = _ref(zs, np.zeros(prob.m))
    z = rng.standard_normal((prob.n, 6))
    opt, fea = error_metrics(prob, z, ref)
    for c in range(6):
        r = to_dense(prob.H) @ z[:, c] - prob.g
        expected = 0.5 * np.sum((r - prob.K.project(r)) ** 2) / (zs @ zs)
        assert fea[c] == pytest.approx(expected, rel=1e-12)
        assert opt[c] == pytest.approx(np.sum((z[:, c] - zs) ** 2) / (zs @ zs), rel=1e-12)


def test_zero_reference_rejected():
    with pytest.raises(ValueError, match="nonzero"):
        _ref([0.0, 0.0], [1.0])


# -- KKT certificate -----------------------------------------------------------

def test_toy_saddle_point_has_zero_residuals():
    r = kkt_certificate(toy_problem(), np.array([1.0]), np.array([-1.0]))
    assert r == KKTResiduals(0.0, 0.0, 0.0, 0.0)


def test_certificate_detects_violations():
    prob = toy_problem()
    assert kkt_certificate(prob, np.array([0.0]), np.array([-1.0])).feasibility > 0
    assert kkt_certificate(prob, np.array([1.0]), np.array([1.0])).polar_membership > 0
    assert kkt_certificate(prob, np.array([2.0]), np.array([-1.0])).complementarity > 0
    assert kkt_certificate(prob, np.array([2.0]), np.array([-1.0])).fixed_point > 0
    with pytest.raises(ValueError):
        kkt_certificate(prob, np.array([1.0]), np.array([-1.0]), step_probe=0.0)


@pytest.fixture(scope="module")
def certified():
    prob = random_qp(3, True)
    return prob, compute_reference(prob, seed=0)


def test_reference_residuals_within_tolerances(certified):
    prob, bundle = certified
    ref = bundle.reference
    r = kkt_certificate(prob, ref.z_star, ref.w_star)
    for key, value in r.as_dict().items():
        assert value <= ref.tolerances[key]


def test_gap_nonnegative_at_certified_reference(certified):
    prob, bundle = certified
    ref = bundle.reference
    rng = np.random.default_rng(12)
    z = prob.D.project(3 * rng.standard_normal((prob.n, 500)))
    w = prob.K_polar.project(3 * rng.standard_normal((prob.m, 500)))
    gap = lagrangian(prob, z, np.tile(ref.w_star[:, None], 500)) - \
        lagrangian(prob, np.tile(ref.z_star[:, None], 500), w)
    assert np.min(gap) >= -1e-8


# -- file format -------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_round_trip_bit_identical(tmp_path, seed):
    prob = random_qp(seed, seed % 2 == 1)
    path = tmp_path / "p.json"
    save_problem(prob, path)
    back = load_problem(path)
    assert problem_to_dict(back) == problem_to_dict(prob)
    for a, b in ((prob.P, back.P), (prob.H, back.H)):
        assert np.array_equal(to_dense(a), to_dense(b))
    assert np.array_equal(prob.p, back.p) and np.array_equal(prob.g, back.g)
    save_problem(back, tmp_path / "q.json")
    assert (tmp_path / "q.json").read_bytes() == path.read_bytes()


def test_round_trip_keeps_explicit_sigma():
    prob = random_qp(0, True)
    given = ConicProblem(prob.P, prob.p, prob.H, prob.g, prob.K, prob.D, sigma=123.0)
    assert problem_from_dict(problem_to_dict(given)).sigma == 123.0


@pytest.mark.parametrize("key", ["n", "m", "P", "p", "H", "g", "K", "D"])
def test_missing_field_rejected(key):
    d = problem_to_dict(toy_problem())
    del d[key]
    with pytest.raises(FormatError, match=f"missing field '{key}'"):
        problem_from_dict(d)


@pytest.mark.parametrize("edit, where", [
    (lambda d: d.update(p=[1.0, 2.0]), "$.p"),
    (lambda d: d.update(g=["x"]), "$.g[0]"),
    (lambda d: d["K"].update(type="ball"), "$.K"),
    (lambda d: d.update(P={"kind": "sparse"}), "$.P.kind"),
    (lambda d: d.update(H={"kind": "dense", "data": [1.0]}), "$.H.data"),
    (lambda d: d.update(K={"type": "ball", "dim": 1, "radius": 1.0}), "$"),
])
def test_malformed_fields_report_location(edit, where):
    d = problem_to_dict(toy_problem())
    edit(d)
    with pytest.raises(FormatError) as err:
        problem_from_dict(d)
    assert err.value.path == where


def test_invalid_json_reports_line_and_column(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n": 1,\n  "m": oops\n}\n')
    with pytest.raises(FormatError) as err:
        load_problem(path)
    assert err.value.path.endswith(":3:8")


def test_hand_written_masses_file_matches_builder(tmp_path):
    # one mass, two stages, written out from the stacking recipe
    dt, w = 0.25, math.sqrt(2.0)
    c, s = math.cos(w * dt), math.sin(w * dt)
    A = [[c, s / w], [-w * s, c]]
    B = [(1 - c) / 2, s / w]
    H = [
        [1, 0, 0, 0, -B[0], 0],
        [0, 1, 0, 0, -B[1], 0],
        [-A[0][0], -A[0][1], 1, 0, 0, -B[0]],
        [-A[1][0], -A[1][1], 0, 1, 0, -B[1]],
        [0, 0, 0, 0, 1, -1],
        [0, 0, 0, 0, -1, 1],
    ]
    ib = {"type": "infball", "dim": 1, "radius": 2.0}
    X = {"type": "cartesian", "factors": [ib, ib]}
    record = {
        "n": 6, "m": 6,
        "P": {"kind": "dense", "data": np.eye(6).tolist()},
        "p": [-1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        "H": {"kind": "dense", "data": H},
        "g": [0.0, 0.0, 0.0, 0.0, -0.5, -0.5],
        "K": {"type": "cartesian", "factors": [{"type": "zero", "dim": 4},
                                               {"type": "nonneg", "dim": 2}]},
        "D": {"type": "cartesian", "factors": [X, X, ib, ib]},
    }
    path = tmp_path / "masses.json"
    path.write_text(json.dumps(record))
    hand = load_problem(path)
    built = stack_ocp(build_masses(N=1, horizon=2))
    np.testing.assert_allclose(to_dense(hand.H), to_dense(built.H), rtol=0, atol=1e-12)
    np.testing.assert_array_equal(to_dense(hand.P), to_dense(built.P))
    np.testing.assert_array_equal(hand.p, built.p)
    np.testing.assert_array_equal(hand.g, built.g)
    assert geo.set_to_dict(hand.K) == geo.set_to_dict(built.K)
    assert geo.set_to_dict(hand.D) == geo.set_to_dict(built.D)
