from __future__ import annotations

import math

import numpy as np
import pytest

from llmhg.errors import InvalidConfig, NumericalError, ShapeError
from llmhg.hypergraph import laplacian, with_weights
from llmhg.structure import (
    WEIGHT_FLOOR,
    CutPredictor,
    GateParams,
    KernelParams,
    SLHyperparams,
    StructureState,
    corrected_prototypes,
    edge_weights,
    gate_lambda,
    hyperedge_weight,
    initial_prototypes,
    inter_separation,
    intra_cohesion,
    median_bandwidth,
    prototype_corrected,
    prototype_initial,
    sl_gradients,
    squared_distances,
    structure_forward,
    structure_loss,
)

H_SMALL = np.array(
    [
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
    ]
)


def _arrays(seed: int = 0):
    rng = np.random.default_rng(seed)
    n_v, m = H_SMALL.shape
    d_f = 4
    return {
        "X": rng.normal(scale=0.5, size=(n_v, d_f)),
        "text": rng.normal(scale=0.5, size=(m, d_f)),
        "phi": rng.normal(scale=0.5, size=(d_f, d_f)),
        "gate_vector": rng.normal(scale=0.3, size=d_f),
        "gate_bias": np.array(0.2),
        "cut_head": rng.normal(scale=0.5, size=(d_f, m)),
        "cut_bias": rng.normal(scale=0.1, size=m),
    }


def _state(values, *, beta=0.6, mu=2.0, fixed_weights=None):
    return StructureState(
        X=values["X"],
        H=H_SMALL,
        text=values["text"],
        has_text=np.array([True, True, False]),
        kernel=KernelParams(phi=values["phi"], mu=mu),
        gate=GateParams(vector=values["gate_vector"], bias=float(values["gate_bias"])),
        cut=CutPredictor(head=values["cut_head"], bias=values["cut_bias"]),
        beta=beta,
        fixed_weights=fixed_weights,
    )


def _numeric_gradient(values, name, h=1e-6, **state_kwargs):
    target = values[name]
    grad = np.zeros_like(target, dtype=np.float64)
    for index in np.ndindex(target.shape):
        original = float(target[index])
        target[index] = original + h
        plus = structure_forward(_state(values, **state_kwargs)).L_str
        target[index] = original - h
        minus = structure_forward(_state(values, **state_kwargs)).L_str
        target[index] = original
        grad[index] = (plus - minus) / (2 * h)
    return grad


def _relative_error(analytic, numeric):
    analytic, numeric = np.atleast_1d(analytic), np.atleast_1d(numeric)
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    return 0.0 if scale == 0 else float(np.linalg.norm(analytic - numeric) / scale)


def test_gate_lambda_spot_values():
    T = np.array([0.3, -0.2])
    assert gate_lambda(T, GateParams.zeros(2)) == pytest.approx(0.5)
    assert gate_lambda(T, GateParams(vector=np.zeros(2), bias=math.log(3.0))) == pytest.approx(0.25)
    with pytest.raises(NumericalError):
        gate_lambda(T, GateParams(vector=np.array([np.inf, 0.0])))


def test_prototype_correction_per_edge_matches_batch():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5, 3))
    text = rng.normal(size=(3, 3))
    has_text = np.array([True, False, True])
    gate = GateParams(vector=rng.normal(size=3), bias=-0.4)

    p_ori = initial_prototypes(H_SMALL, X)
    P, lam = corrected_prototypes(p_ori, text, has_text, gate)
    for e in range(3):
        members = np.flatnonzero(H_SMALL[:, e])
        single = prototype_initial(X[members])
        np.testing.assert_allclose(p_ori[e], single)
        expected, expected_lam = prototype_corrected(single, text[e] if has_text[e] else None, gate)
        np.testing.assert_allclose(P[e], expected)
        assert lam[e] == pytest.approx(expected_lam)
    assert lam[1] == 0.0

    plain, no_lam = corrected_prototypes(p_ori, text, has_text, gate, use_text=False)
    np.testing.assert_array_equal(plain, p_ori)
    assert not no_lam.any()


def test_duplicate_members_have_unit_cohesion():
    projected = np.array([[0.4, -1.0], [0.4, -1.0]])
    prototypes = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert hyperedge_weight([0, 1], projected, 0.5, prototypes, 0, beta=1.0) == 1.0
    H = np.array([[1.0, 0.0], [1.0, 1.0]])
    w = edge_weights(H, projected, 0.5, prototypes, beta=1.0)
    assert w[0] == pytest.approx(1.0 + WEIGHT_FLOOR, abs=0)


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
def test_vectorized_weights_match_pairwise_loop(beta):
    rng = np.random.default_rng(2)
    Y = rng.normal(size=(5, 3))
    P = rng.normal(size=(3, 3))
    w = edge_weights(H_SMALL, Y, 1.7, P, beta)
    for e in range(3):
        members = np.flatnonzero(H_SMALL[:, e]).tolist()
        assert w[e] == pytest.approx(hyperedge_weight(members, Y, 1.7, P, e, beta) + WEIGHT_FLOOR, rel=1e-12, abs=1e-12)
    with pytest.raises(InvalidConfig):
        edge_weights(H_SMALL, Y, 0.0, P, beta)


def test_inter_separation_counts_the_edge_itself():
    P = np.array([[0.0, 0.0], [3.0, 4.0]])
    np.testing.assert_allclose(inter_separation(P), [12.5, 12.5])
    assert inter_separation(np.zeros((0, 2))).shape == (0,)


def test_median_bandwidth():
    Y = np.array([[0.0], [1.0], [3.0]])
    assert median_bandwidth(Y, np.ones((3, 1))) == pytest.approx(4.0)
    assert median_bandwidth(Y, np.eye(3), fallback=2.5) == 2.5
    assert median_bandwidth(np.zeros((3, 1)), np.ones((3, 1)), fallback=0.7) == 0.7


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("c", [0.1, 3.0])
def test_scaled_features_keep_the_cohesion_order(seed, c):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(8, 4))
    H = (rng.random((8, 5)) < 0.5).astype(float)
    H[:2] = 1.0
    mu = median_bandwidth(X, H)
    scaled_mu = median_bandwidth(c * X, H)
    assert scaled_mu == pytest.approx(c * c * mu)
    cohesion = intra_cohesion(np.exp(-squared_distances(X) / mu), H)
    scaled = intra_cohesion(np.exp(-squared_distances(c * X) / scaled_mu), H)
    np.testing.assert_allclose(scaled, cohesion, rtol=1e-9)
    assert np.array_equal(np.argsort(scaled, kind="stable"), np.argsort(cohesion, kind="stable"))


def test_structure_loss_equals_trace():
    rng = np.random.default_rng(3)
    F = rng.random((5, 3))
    tensors = with_weights(H_SMALL, rng.uniform(0.1, 1.0, 3))
    L = laplacian(tensors)
    assert structure_loss(F, tensors) == pytest.approx(float(np.trace(F.T @ L @ F)))
    assert structure_loss(F, L) == pytest.approx(structure_loss(F, tensors))
    with pytest.raises(ShapeError):
        structure_loss(F[:4], tensors)
    with pytest.raises(ShapeError):
        structure_loss(rng.random((5, 2)), tensors)


def test_forward_loss_matches_laplacian_form():
    values = _arrays()
    tape = structure_forward(_state(values))
    L = laplacian(with_weights(H_SMALL, tape.w))
    assert tape.L_str == pytest.approx(float(np.trace(tape.F.T @ L @ tape.F)), rel=1e-10)
    assert tape.L_str >= -1e-12


@pytest.mark.parametrize("name", ["X", "phi", "gate_vector", "gate_bias", "cut_head", "cut_bias"])
def test_structure_gradients_match_finite_differences(name):
    values = _arrays(seed=4)
    _, grads = sl_gradients(_state(values))
    analytic = {
        "X": grads.X,
        "phi": grads.phi,
        "gate_vector": grads.gate_vector,
        "gate_bias": grads.gate_bias,
        "cut_head": grads.cut_head,
        "cut_bias": grads.cut_bias,
    }[name]
    assert _relative_error(analytic, _numeric_gradient(values, name)) < 1e-5


def test_fixed_weights_only_train_the_cut_head():
    values = _arrays(seed=5)
    fixed = np.ones(3)
    _, grads = sl_gradients(_state(values, fixed_weights=fixed))
    assert not grads.phi.any() and not grads.gate_vector.any()
    numeric = _numeric_gradient(values, "cut_head", fixed_weights=fixed)
    assert _relative_error(grads.cut_head, numeric) < 1e-5
    with pytest.raises(NumericalError):
        structure_forward(_state(values, fixed_weights=np.array([1.0, np.nan, 1.0])))
    with pytest.raises(ShapeError):
        structure_forward(_state(values, fixed_weights=np.ones(2)))


def test_weight_terms_route_gradients():
    values = _arrays(seed=6)
    _, intra_only = sl_gradients(_state(values, beta=1.0))
    assert not intra_only.gate_vector.any() and intra_only.gate_bias == 0.0
    _, inter_only = sl_gradients(_state(values, beta=0.0))
    assert not inter_only.phi.any()


def test_parameter_validation():
    with pytest.raises(InvalidConfig):
        KernelParams.identity(3, mu=0.0)
    with pytest.raises(ShapeError):
        CutPredictor(head=np.zeros((3, 2)), bias=np.zeros(2)).predict(np.zeros((4, 3)), 3)
    with pytest.raises(ShapeError):
        StructureState(
            X=np.zeros((5, 4)),
            H=H_SMALL,
            text=np.zeros((2, 4)),
            has_text=np.zeros(3, dtype=bool),
            kernel=KernelParams.identity(4),
            gate=GateParams.zeros(4),
            cut=CutPredictor(head=np.zeros((4, 3)), bias=np.zeros(3)),
        )
    with pytest.raises(InvalidConfig):
        SLHyperparams(beta=1.5)
    with pytest.raises(InvalidConfig):
        SLHyperparams(weight_refresh_every=0)
