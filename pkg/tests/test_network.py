import math

import numpy as np
import pytest

from helpers import central_diff, rel_err
from triam.errors import FeasibilityError, ShapeError
from triam.network import (
    Activation,
    NetworkSpec,
    NetworkState,
    RegularizerSpec,
    activation_apply,
    activation_inverse_bounds,
    forward_inference,
    loss_R,
    loss_R_grad,
    objective_F,
    penalty_grads,
    penalty_phi,
    regularizer_value,
)

ALL_ACTS = [
    Activation("relu"),
    Activation("leaky_relu", 0.01),
    Activation("erelu", 0.1),
    Activation("cerelu", 0.1),
]


class TestActivationApply:
    def test_relu_negative(self):
        assert activation_apply(Activation("relu"), np.array([[-1.0]]))[0, 0] == 0.0

    def test_leaky_default_slope(self):
        out = activation_apply(Activation("leaky_relu", 0.01), np.array([[-1.0]]))
        assert out[0, 0] == pytest.approx(-0.01)

    def test_erelu_printed_formula(self):
        out = activation_apply(Activation("erelu", 0.1), np.array([[-1.0]]))
        assert out[0, 0] == pytest.approx(0.1 * (math.exp(-1.0) - 1.0))
        assert out[0, 0] == pytest.approx(-0.06321, abs=1e-5)

    def test_cerelu_formula(self):
        alpha = 0.1
        out = activation_apply(Activation("cerelu", alpha), np.array([[-0.05]]))
        assert out[0, 0] == pytest.approx(alpha * (math.exp(-0.05 / alpha) - 1.0))

    def test_positive_region_is_identity(self):
        z = np.array([[0.3, 2.0, 7.5]])
        for act in ALL_ACTS:
            np.testing.assert_array_equal(activation_apply(act, z), z)

    @pytest.mark.parametrize("act", ALL_ACTS, ids=lambda a: a.kind)
    def test_monotone_and_continuous(self, act):
        z = np.linspace(-6, 6, 4001).reshape(1, -1)
        h = activation_apply(act, z)
        assert np.all(np.diff(h[0]) >= 0)
        assert np.max(np.abs(np.diff(h[0]))) < 1.5 * (z[0, 1] - z[0, 0]) + 1e-12

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            Activation("leaky_relu", -1.0)
        with pytest.raises(ValueError):
            Activation("swish")


class TestInverseBounds:
    def test_relu_interior(self):
        lo, hi = activation_inverse_bounds(Activation("relu"), np.array([[0.5]]), 0.1)
        assert lo[0, 0] == pytest.approx(0.4)
        assert hi[0, 0] == pytest.approx(0.6)

    def test_relu_unbounded_below(self):
        lo, hi = activation_inverse_bounds(Activation("relu"), np.array([[0.05]]), 0.1)
        assert lo[0, 0] == -np.inf
        assert hi[0, 0] == pytest.approx(0.15)

    def test_leaky_negative_band(self):
        lo, hi = activation_inverse_bounds(
            Activation("leaky_relu", 0.01), np.array([[-0.005]]), 0.005
        )
        assert lo[0, 0] == pytest.approx(-1.0)
        assert hi[0, 0] == pytest.approx(0.0)

    def test_relu_infeasible_raises_with_entry(self):
        with pytest.raises(FeasibilityError, match=r"\(0, 1\)"):
            activation_inverse_bounds(Activation("relu"), np.array([[0.5, -0.3]]), 0.1)

    def test_relu_repair_mode(self):
        lo, hi = activation_inverse_bounds(
            Activation("relu"), np.array([[0.5, -0.3]]), 0.1, repair=True
        )
        assert lo[0, 1] == -np.inf
        assert hi[0, 1] == 0.0
        assert hi[0, 0] == pytest.approx(0.6)

    def test_erelu_infeasible(self):
        with pytest.raises(FeasibilityError):
            activation_inverse_bounds(Activation("erelu", 0.1), np.array([[-0.5]]), 0.1)

    @pytest.mark.parametrize("act", ALL_ACTS, ids=lambda a: a.kind)
    def test_sampled_bounds_property(self, act):
        # Inside [B1, B2] the constraint holds; just outside a finite
        # bound it fails.
        rng = np.random.default_rng(42)
        a = rng.uniform(-0.2, 3.0, (10, 100))
        eps = 0.05
        if act.kind == "relu":
            a = np.maximum(a, -eps + 1e-6)  # keep feasible
        elif act.kind in ("erelu", "cerelu"):
            a = np.maximum(a, -act.alpha - eps + 1e-3)
        lo, hi = activation_inverse_bounds(act, a, eps)
        for _ in range(10):
            frac = rng.uniform(0, 1, a.shape)
            lo_f = np.where(np.isfinite(lo), lo, np.minimum(hi, 0.0) - 3.0)
            z = lo_f + frac * (hi - lo_f)
            h = activation_apply(act, z)
            assert np.all(h >= a - eps - 1e-9) and np.all(h <= a + eps + 1e-9)
        step = 1e-6 * (1.0 + np.abs(hi))
        h_out = activation_apply(act, hi + step)
        assert np.all(h_out > a + eps - 1e-12)
        finite_lo = np.isfinite(lo)
        if np.any(finite_lo):
            step = 1e-6 * (1.0 + np.abs(lo))
            h_out = activation_apply(act, lo - step)
            assert np.all(h_out[finite_lo] < (a + eps)[finite_lo])
            assert np.all(h_out[finite_lo] <= (a - eps)[finite_lo] + 1e-9)


def _rand_penalty_instance(rng, n=3, m=4, N=5):
    a_prev = rng.standard_normal((m, N))
    W = rng.standard_normal((n, m))
    z = rng.standard_normal((n, N))
    b = rng.standard_normal((n, 1))
    return a_prev, W, z, b


class TestPenalty:
    def test_zero_residual(self):
        rng = np.random.default_rng(0)
        a_prev, W, _, b = _rand_penalty_instance(rng)
        z = W @ a_prev + b
        assert penalty_phi(a_prev, W, z, b, 2.0) == pytest.approx(0.0)

    def test_scalar_case(self):
        val = penalty_phi(
            np.array([[1.0]]), np.array([[1.0]]), np.array([[3.0]]), np.array([[0.0]]), 2.0
        )
        assert val == pytest.approx(4.0)

    def test_rho_linearity(self):
        rng = np.random.default_rng(1)
        a_prev, W, z, b = _rand_penalty_instance(rng)
        assert penalty_phi(a_prev, W, z, b, 2.4) == pytest.approx(
            2.0 * penalty_phi(a_prev, W, z, b, 1.2)
        )

    def test_zero_residual_grads(self):
        rng = np.random.default_rng(2)
        a_prev, W, _, b = _rand_penalty_instance(rng)
        z = W @ a_prev + b
        for g in penalty_grads(a_prev, W, z, b, 2.0):
            np.testing.assert_allclose(g, 0.0, atol=1e-12)

    def test_scalar_gz(self):
        g = penalty_grads(
            np.array([[1.0]]), np.array([[1.0]]), np.array([[3.0]]), np.array([[0.0]]), 2.0
        )
        assert g[2][0, 0] == pytest.approx(4.0)

    def test_grads_match_finite_differences(self):
        rng = np.random.default_rng(3)
        rho = 1.7
        for _ in range(20):
            a_prev, W, z, b = _rand_penalty_instance(rng)
            gW, gb, gz, ga = penalty_grads(a_prev, W, z, b, rho)
            assert rel_err(central_diff(lambda m: penalty_phi(a_prev, m, z, b, rho), W), gW) < 1e-6
            assert rel_err(central_diff(lambda m: penalty_phi(a_prev, W, z, m, rho), b), gb) < 1e-6
            assert rel_err(central_diff(lambda m: penalty_phi(a_prev, W, m, b, rho), z), gz) < 1e-6
            assert rel_err(central_diff(lambda m: penalty_phi(m, W, z, b, rho), a_prev), ga) < 1e-6

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            penalty_phi(np.zeros((4, 5)), np.zeros((3, 4)), np.zeros((3, 4)), np.zeros((3, 1)), 1.0)


class TestLoss:
    def test_uniform_softmax(self):
        z = np.array([[0.0], [0.0]])
        y = np.array([[1.0], [0.0]])
        assert loss_R(z, y) == pytest.approx(math.log(2.0))

    def test_confident_correct(self):
        z = np.array([[30.0], [0.0]])
        y = np.array([[1.0], [0.0]])
        assert loss_R(z, y) == pytest.approx(0.0, abs=1e-12)

    def test_mean_aggregation(self):
        z = np.array([[0.0, 30.0], [0.0, 0.0]])
        y = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert loss_R(z, y) == pytest.approx(0.5 * math.log(2.0), abs=1e-12)

    def test_rejects_non_onehot(self):
        z = np.zeros((2, 1))
        with pytest.raises(ValueError):
            loss_R(z, np.array([[0.5], [0.5]]))
        with pytest.raises(ValueError):
            loss_R(z, np.array([[1.0], [1.0]]))

    def test_grad_single_column(self):
        z = np.array([[0.0], [0.0]])
        y = np.array([[1.0], [0.0]])
        np.testing.assert_allclose(loss_R_grad(z, y), [[-0.5], [0.5]])

    def test_grad_fixed_point(self):
        # softmax(z) == y only in the limit; verify via the gradient form.
        z = np.array([[40.0, 0.0], [0.0, 40.0]])
        y = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(loss_R_grad(z, y), 0.0, atol=1e-12)

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((4, 7))
        labels = rng.integers(0, 4, 7)
        y = np.zeros((4, 7))
        y[labels, np.arange(7)] = 1.0
        g = loss_R_grad(z, y)
        fd = central_diff(lambda m: loss_R(m, y), z)
        assert rel_err(fd, g) < 1e-6


class TestRegularizer:
    def test_none(self):
        assert regularizer_value(RegularizerSpec(), np.array([[5.0, -3.0]])) == 0.0

    def test_l2(self):
        assert regularizer_value(RegularizerSpec("l2", 2.0), np.array([[3.0, 4.0]])) == 25.0

    def test_l1(self):
        assert regularizer_value(RegularizerSpec("l1", 1.0), np.array([[-2.0, 0.5]])) == 2.5

    def test_negative_strength_rejected(self):
        with pytest.raises(ValueError):
            RegularizerSpec("l2", -0.1)


def _chain_state(W, b, x, act, L):
    z, a = [], []
    cur = x
    for l in range(L):
        zl = W[l] @ cur + b[l]
        z.append(zl)
        if l < L - 1:
            cur = activation_apply(act, zl)
            a.append(cur)
    return z, a


class TestObjective:
    def test_feedforward_state_reduces_to_loss(self):
        rng = np.random.default_rng(5)
        act = Activation("relu")
        dims = [4, 6, 5, 3]
        W = [rng.standard_normal((dims[i + 1], dims[i])) for i in range(3)]
        b = [rng.standard_normal((dims[i + 1], 1)) for i in range(3)]
        x = rng.standard_normal((4, 9))
        z, a = _chain_state(W, b, x, act, 3)
        state = NetworkState(W=W, b=b, z=z, a=a)
        labels = rng.integers(0, 3, 9)
        y = np.zeros((3, 9))
        y[labels, np.arange(9)] = 1.0
        F = objective_F(state, x, y, 3.3, RegularizerSpec())
        assert F == pytest.approx(loss_R(z[-1], y), abs=1e-12)

    def test_rho_doubling_doubles_penalty_part(self):
        rng = np.random.default_rng(6)
        act = Activation("relu")
        dims = [3, 4, 4, 2]
        W = [rng.standard_normal((dims[i + 1], dims[i])) for i in range(3)]
        b = [rng.standard_normal((dims[i + 1], 1)) for i in range(3)]
        x = rng.standard_normal((3, 5))
        z, a = _chain_state(W, b, x, act, 3)
        z = [zl + rng.standard_normal(zl.shape) for zl in z]  # nonzero residuals
        state = NetworkState(W=W, b=b, z=z, a=a)
        labels = rng.integers(0, 2, 5)
        y = np.zeros((2, 5))
        y[labels, np.arange(5)] = 1.0
        R = loss_R(z[-1], y)
        f1 = objective_F(state, x, y, 1.0, RegularizerSpec())
        f2 = objective_F(state, x, y, 2.0, RegularizerSpec())
        assert f2 - R == pytest.approx(2.0 * (f1 - R), rel=1e-12)

    def test_scalar_hand_oracle(self):
        # One hidden layer net collapsed to scalars: d=1, n1=1, n2=2, N=1.
        # Independent evaluation: F = R + phi1 + phi2 computed by hand.
        x = np.array([[1.0]])
        W1, b1, z1 = np.array([[1.0]]), np.array([[0.0]]), np.array([[0.0]])
        a1 = np.array([[0.0]])  # h(z1) for relu
        W2 = np.array([[0.5], [-0.5]])
        b2 = np.array([[0.0], [0.0]])
        z2 = np.array([[0.0], [0.0]])
        y = np.array([[1.0], [0.0]])
        rho = 2.0
        state = NetworkState(W=[W1, W2], b=[b1, b2], z=[z1, z2], a=[a1])
        # phi1 = (rho/2)(0 - 1*1 - 0)^2 = 1.0; phi2 = 0 since W2 a1 = 0.
        # R = ln 2 for uniform logits.
        expected = math.log(2.0) + 1.0
        assert objective_F(state, x, y, rho, RegularizerSpec()) == pytest.approx(
            expected, abs=1e-12
        )

    def test_nonnegative_property(self):
        rng = np.random.default_rng(7)
        act = Activation("leaky_relu", 0.01)
        dims = [3, 5, 4, 3]
        for _ in range(20):
            W = [rng.standard_normal((dims[i + 1], dims[i])) for i in range(3)]
            b = [rng.standard_normal((dims[i + 1], 1)) for i in range(3)]
            x = rng.standard_normal((3, 6))
            z, a = _chain_state(W, b, x, act, 3)
            z = [zl + 0.3 * rng.standard_normal(zl.shape) for zl in z]
            a = [al + 0.1 * rng.standard_normal(al.shape) for al in a]
            state = NetworkState(W=W, b=b, z=z, a=a)
            labels = rng.integers(0, 3, 6)
            y = np.zeros((3, 6))
            y[labels, np.arange(6)] = 1.0
            reg = RegularizerSpec("l2", 0.1)
            assert objective_F(state, x, y, 0.7, reg) >= 0.0


class TestForwardInference:
    def test_zero_net_ties_to_class_zero(self):
        spec = NetworkSpec((2, 3, 2), Activation("relu"), 2)
        W = [np.zeros((3, 2)), np.zeros((2, 3))]
        b = [np.zeros((3, 1)), np.zeros((2, 1))]
        x = np.ones((2, 4))
        logits, pred = forward_inference(spec, W, b, x)
        np.testing.assert_array_equal(logits, np.zeros((2, 4)))
        np.testing.assert_array_equal(pred, np.zeros(4, dtype=int))

    def test_hand_forward_2_2_2(self):
        spec = NetworkSpec((2, 2, 2), Activation("relu"), 2)
        W = [np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[2.0, 0.0], [0.0, 1.0]])]
        b = [np.array([[0.5], [-0.5]]), np.array([[0.0], [0.25]])]
        x = np.array([[1.0], [2.0]])
        # layer 1: z = [1.5, 1.5]; a = [1.5, 1.5]
        # layits: [3.0, 1.75] -> class 0
        logits, pred = forward_inference(spec, W, b, x)
        np.testing.assert_allclose(logits, [[3.0], [1.75]])
        assert pred[0] == 0

    def test_row_shift_invariance_of_predictions(self):
        rng = np.random.default_rng(8)
        spec = NetworkSpec((3, 4, 3), Activation("relu"), 3)
        W = [rng.standard_normal((4, 3)), rng.standard_normal((3, 4))]
        b = [rng.standard_normal((4, 1)), rng.standard_normal((3, 1))]
        x = rng.standard_normal((3, 10))
        _, pred = forward_inference(spec, W, b, x)
        b_shift = [b[0], b[1] + 1.37]
        _, pred2 = forward_inference(spec, W, b_shift, x)
        np.testing.assert_array_equal(pred, pred2)
